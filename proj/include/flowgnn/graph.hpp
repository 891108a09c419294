#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowgnn/ingest.hpp"

namespace flowgnn {

// One flow as a graph edge. `src` is a source node id, `dst` a destination
// node id; `record` indexes the flow's row in the dataset.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::size_t record = 0;
  int label = 0;

  bool operator==(const Edge&) const = default;
};

// Bipartite flow graph G(S, D; E). Node ids are dense: sources occupy
// [0, |S|) and destinations [|S|, |S|+|D|). Parallel edges are kept.
// Incidence is stored in CSR form; each edge appears in exactly two lists.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;
  BipartiteGraph(std::size_t num_sources, std::size_t num_destinations, std::vector<Edge> edges,
                 std::size_t virtual_sources = 0, std::size_t virtual_destinations = 0);

  std::size_t num_sources() const { return num_sources_; }
  std::size_t num_destinations() const { return num_destinations_; }
  std::size_t num_nodes() const { return num_sources_ + num_destinations_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t virtual_sources() const { return virtual_sources_; }
  std::size_t virtual_destinations() const { return virtual_destinations_; }

  bool is_source(std::size_t node) const { return node < num_sources_; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }
  std::span<const Edge> edges() const { return edges_; }

  std::span<const std::size_t> incident(std::size_t node) const {
    return {incident_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
  }
  std::size_t degree(std::size_t node) const { return offsets_[node + 1] - offsets_[node]; }

  // The endpoint of `e` that is not `node`.
  std::size_t opposite(std::size_t e, std::size_t node) const {
    return edges_[e].src == node ? edges_[e].dst : edges_[e].src;
  }

  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<std::size_t>& incidence() const { return incident_; }

  bool operator==(const BipartiteGraph&) const = default;

 private:
  std::size_t num_sources_ = 0;
  std::size_t num_destinations_ = 0;
  std::size_t virtual_sources_ = 0;
  std::size_t virtual_destinations_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> incident_;
};

// One edge per record, in input order. Source and destination keys live in
// separate namespaces, so "a" as a source and "a" as a destination are two
// different nodes.
BipartiteGraph build_bipartite(std::span<const FlowRecord> records);
// Only the records listed in `subset` become edges; edge i carries
// record index subset[i].
BipartiteGraph build_bipartite(std::span<const FlowRecord> records, std::span<const std::size_t> subset);
BipartiteGraph build_bipartite(std::span<const std::string> src_keys, std::span<const std::string> dst_keys,
                               std::span<const int> labels);

// Pads the smaller side with virtual nodes until |S| == |D|, then redraws
// the endpoint on that side of every edge uniformly from the padded set.
// Returns an unchanged copy when |S| == |D|.
BipartiteGraph augment_virtual_nodes(const BipartiteGraph& g, std::uint64_t seed);

// Sum over all nodes of d(d-1)/2. Equals the line graph's edge count when
// no two edges share both endpoints; overcounts parallel edges otherwise.
std::uint64_t line_edge_count(const BipartiteGraph& g);

// Line graph G'(V', E'): node i is edge i of the bipartite graph. Two nodes
// are adjacent iff their edges share at least one endpoint; no self-loops,
// each adjacent pair stored once.
class LineGraph {
 public:
  LineGraph() = default;
  LineGraph(std::vector<std::size_t> records, std::vector<int> labels, std::vector<std::size_t> offsets,
            std::vector<std::size_t> neighbors);

  std::size_t num_nodes() const { return records_.size(); }
  std::size_t num_edges() const { return neighbors_.size() / 2; }
  std::span<const std::size_t> neighbors(std::size_t node) const {
    return {neighbors_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
  }
  std::size_t degree(std::size_t node) const { return offsets_[node + 1] - offsets_[node]; }
  std::size_t record(std::size_t node) const { return records_[node]; }
  int label(std::size_t node) const { return labels_[node]; }

 private:
  std::vector<std::size_t> records_;
  std::vector<int> labels_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> neighbors_;
};

inline constexpr std::uint64_t kDefaultLineEdgeCap = 50'000'000;

// Full materialization. Throws CapacityError, before allocating, when the
// predicted edge count exceeds `max_edges`.
LineGraph build_line_graph(const BipartiteGraph& g, std::uint64_t max_edges = kDefaultLineEdgeCap);

// Neighbors of `e` in the line graph, derived from incidence without
// materializing it. Sorted, unique, excludes `e`.
std::vector<std::size_t> line_neighbors(const BipartiteGraph& g, std::size_t e);

// Degree histogram as (degree, node count) pairs sorted by degree.
std::vector<std::pair<std::size_t, std::size_t>> degree_histogram(const BipartiteGraph& g);

// Binary graph cache; layout documented in docs/formats.md.
void save_graph(const BipartiteGraph& g, std::uint64_t seed, const std::filesystem::path& path);
BipartiteGraph load_graph(const std::filesystem::path& path, std::uint64_t* seed = nullptr);

}  // namespace flowgnn
