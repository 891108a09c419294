#include "flowgnn/sampling.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "flowgnn/error.hpp"
#include "flowgnn/rng.hpp"

namespace flowgnn {

namespace {

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void check_batch(std::span<const std::size_t> batch, std::size_t limit, const char* what) {
  if (batch.empty()) throw std::invalid_argument(std::string(what) + ": empty batch");
  for (std::size_t e : batch) {
    if (e >= limit) {
      throw std::out_of_range(std::string(what) + ": batch index " + std::to_string(e) + " out of range (" +
                              std::to_string(limit) + " available)");
    }
  }
}

std::size_t local_index(const std::vector<std::size_t>& sorted, std::size_t value) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), value);
  return static_cast<std::size_t>(it - sorted.begin());
}

// Shared BFS for both line-graph sources. `adjacent(e)` returns the sorted
// line-graph neighbors of e, excluding e.
template <typename Adjacent>
LineNeighborhood expand_line(std::span<const std::size_t> batch, int hops, const LineNeighborhoodOptions& options,
                             Adjacent&& adjacent) {
  if (hops < 1) throw std::invalid_argument("full_line_neighborhood: hops must be >= 1");
  LineNeighborhood nb;
  nb.batch.assign(batch.begin(), batch.end());
  nb.layers.resize(static_cast<std::size_t>(hops) + 1);
  nb.layers[hops] = sorted_unique(nb.batch);

  std::vector<std::size_t> frontier = nb.layers[hops];
  for (int k = hops; k >= 1; --k) {
    const auto& current = nb.layers[k];
    std::vector<std::size_t> grown = current;
    for (std::size_t e : frontier) {
      auto adj = adjacent(e);
      grown.insert(grown.end(), adj.begin(), adj.end());
    }
    grown = sorted_unique(std::move(grown));
    if (grown.size() > options.node_cap) {
      throw CapacityError("line neighborhood reached " + std::to_string(grown.size()) + " nodes, cap is " +
                          std::to_string(options.node_cap));
    }
    frontier.clear();
    std::set_difference(grown.begin(), grown.end(), current.begin(), current.end(), std::back_inserter(frontier));
    nb.layers[k - 1] = std::move(grown);
  }

  nb.nodes = nb.layers[0];
  for (std::size_t e : nb.batch) nb.batch_rows.push_back(local_index(nb.nodes, e));
  for (std::size_t v = 0; v < nb.nodes.size(); ++v) {
    std::vector<std::size_t> local;
    for (std::size_t u : adjacent(nb.nodes[v])) {
      auto it = std::lower_bound(nb.nodes.begin(), nb.nodes.end(), u);
      if (it != nb.nodes.end() && *it == u) local.push_back(static_cast<std::size_t>(it - nb.nodes.begin()));
    }
    if (options.self_loops) local.insert(std::lower_bound(local.begin(), local.end(), v), v);
    nb.neighbors.insert(nb.neighbors.end(), local.begin(), local.end());
    nb.offsets.push_back(nb.neighbors.size());
  }
  return nb;
}

}  // namespace

std::size_t HopSample::row_of(std::size_t node) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it == nodes.end() || *it != node) throw std::out_of_range("node " + std::to_string(node) + " not in hop");
  return static_cast<std::size_t>(it - nodes.begin());
}

std::vector<std::size_t> endpoint_nodes(const BipartiteGraph& g, std::span<const std::size_t> edges) {
  std::vector<std::size_t> nodes;
  nodes.reserve(2 * edges.size());
  for (std::size_t e : edges) {
    nodes.push_back(g.edge(e).src);
    nodes.push_back(g.edge(e).dst);
  }
  return sorted_unique(std::move(nodes));
}

std::uint64_t khop_capacity(std::size_t batch_size, int hops, int sample_size) {
  std::uint64_t cap = batch_size;
  for (int k = 0; k < hops; ++k) cap *= 1 + 2 * static_cast<std::uint64_t>(sample_size);
  return cap;
}

BatchNeighborhood sample_khop(const BipartiteGraph& g, std::span<const std::size_t> batch, int hops,
                              int sample_size, std::uint64_t seed) {
  if (hops < 1) throw std::invalid_argument("sample_khop: hops must be >= 1");
  if (sample_size < 1) throw std::invalid_argument("sample_khop: sample_size must be >= 1");
  check_batch(batch, g.num_edges(), "sample_khop");

  BatchNeighborhood nb;
  nb.batch.assign(batch.begin(), batch.end());
  nb.layers.resize(static_cast<std::size_t>(hops) + 1);
  nb.hops.resize(static_cast<std::size_t>(hops));
  nb.layers[hops] = sorted_unique(nb.batch);

  std::unordered_map<std::size_t, std::vector<std::size_t>> batch_incident;
  for (std::size_t e : nb.layers[hops]) {
    batch_incident[g.edge(e).src].push_back(e);
    batch_incident[g.edge(e).dst].push_back(e);
  }

  Rng rng = make_rng(seed);
  const auto s = static_cast<std::size_t>(sample_size);
  std::vector<std::size_t> chosen;
  for (int k = hops; k >= 1; --k) {
    HopSample& hop = nb.hops[k - 1];
    hop.nodes = endpoint_nodes(g, nb.layers[k]);
    std::vector<std::size_t> grown = nb.layers[k];
    for (std::size_t v : hop.nodes) {
      auto incident = g.incident(v);
      chosen.clear();
      if (incident.size() <= s) {
        chosen.assign(incident.begin(), incident.end());
      } else {
        std::sample(incident.begin(), incident.end(), std::back_inserter(chosen), s, rng);
      }
      if (auto it = batch_incident.find(v); it != batch_incident.end()) {
        chosen.insert(chosen.end(), it->second.begin(), it->second.end());
      }
      std::sort(chosen.begin(), chosen.end());
      chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
      hop.edges.insert(hop.edges.end(), chosen.begin(), chosen.end());
      hop.offsets.push_back(hop.edges.size());
      grown.insert(grown.end(), chosen.begin(), chosen.end());
    }
    nb.layers[k - 1] = sorted_unique(std::move(grown));
    if (nb.layers[k - 1].size() > nb.layers[k].size() * (1 + 2 * s)) {
      throw std::logic_error("sample_khop: hop exceeded its size bound");
    }
  }
  return nb;
}

LineNeighborhood full_line_neighborhood(const BipartiteGraph& g, std::span<const std::size_t> batch, int hops,
                                        const LineNeighborhoodOptions& options) {
  check_batch(batch, g.num_edges(), "full_line_neighborhood");
  return expand_line(batch, hops, options, [&](std::size_t e) { return line_neighbors(g, e); });
}

LineNeighborhood full_line_neighborhood(const LineGraph& lg, std::span<const std::size_t> batch, int hops,
                                        const LineNeighborhoodOptions& options) {
  check_batch(batch, lg.num_nodes(), "full_line_neighborhood");
  return expand_line(batch, hops, options, [&](std::size_t e) {
    auto n = lg.neighbors(e);
    return std::vector<std::size_t>(n.begin(), n.end());
  });
}

}  // namespace flowgnn
