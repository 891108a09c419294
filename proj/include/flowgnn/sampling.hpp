#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flowgnn/graph.hpp"

namespace flowgnn {

// Neighbor edges drawn for every node of one hop's frontier. `nodes` is
// sorted; the neighbors of nodes[i] are edges[offsets[i] .. offsets[i+1]),
// sorted and unique.
struct HopSample {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> edges;

  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {edges.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  // Position of `node` in `nodes`; throws std::out_of_range when absent.
  std::size_t row_of(std::size_t node) const;
};

// Sampled k-hop neighborhood of an edge batch. layers[K] is the batch and
// layers[0] the widest hop; layers[k] is a subset of layers[k-1].
// hops[k-1] is the sample drawn at iteration k for the nodes of layers[k].
struct BatchNeighborhood {
  std::vector<std::size_t> batch;
  std::vector<std::vector<std::size_t>> layers;
  std::vector<HopSample> hops;

  int depth() const { return static_cast<int>(hops.size()); }
};

// Endpoints of a set of edges, sorted and unique.
std::vector<std::size_t> endpoint_nodes(const BipartiteGraph& g, std::span<const std::size_t> edges);

// Uniform fixed-size neighborhood sampling. For every frontier node of
// degree d: if d <= sample_size every incident edge is taken, otherwise
// sample_size distinct incident edges are drawn uniformly. Incident batch
// edges are always added to their endpoints' neighbor lists. Fresh draws
// at each hop; deterministic for a fixed seed.
BatchNeighborhood sample_khop(const BipartiteGraph& g, std::span<const std::size_t> batch, int hops,
                              int sample_size, std::uint64_t seed);

// Upper bound on |layers[0]| for a batch of size b: b * (1 + 2s)^hops.
std::uint64_t khop_capacity(std::size_t batch_size, int hops, int sample_size);

struct LineNeighborhoodOptions {
  bool self_loops = true;
  std::size_t node_cap = 200'000;
};

// Exact hop expansion on line-graph adjacency, plus the adjacency induced
// on the expanded node set. `nodes` (== layers[0]) is sorted; local index
// i refers to nodes[i]. The neighbor list of local node v is
// neighbors[offsets[v] .. offsets[v+1]) in ascending local order, and
// contains v itself when self_loops is set.
struct LineNeighborhood {
  std::vector<std::size_t> batch;
  std::vector<std::vector<std::size_t>> layers;
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> batch_rows;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> neighbors;

  std::size_t size() const { return nodes.size(); }
  std::span<const std::size_t> neighbors_of(std::size_t v) const {
    return {neighbors.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
};

// Line adjacency is derived on the fly from bipartite incidence.
// Throws CapacityError when the expansion exceeds options.node_cap.
LineNeighborhood full_line_neighborhood(const BipartiteGraph& g, std::span<const std::size_t> batch, int hops,
                                        const LineNeighborhoodOptions& options = {});
LineNeighborhood full_line_neighborhood(const LineGraph& lg, std::span<const std::size_t> batch, int hops,
                                        const LineNeighborhoodOptions& options = {});

}  // namespace flowgnn
