#include "flowgnn/graph.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_map>

#include "flowgnn/error.hpp"
#include "flowgnn/rng.hpp"

namespace flowgnn {

BipartiteGraph::BipartiteGraph(std::size_t num_sources, std::size_t num_destinations, std::vector<Edge> edges,
                               std::size_t virtual_sources, std::size_t virtual_destinations)
    : num_sources_(num_sources),
      num_destinations_(num_destinations),
      virtual_sources_(virtual_sources),
      virtual_destinations_(virtual_destinations),
      edges_(std::move(edges)) {
  const std::size_t n = num_nodes();
  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : edges_) {
    if (e.src >= num_sources_ || e.dst < num_sources_ || e.dst >= n) {
      throw std::invalid_argument("edge endpoints violate the bipartite id layout");
    }
    ++degree[e.src];
    ++degree[e.dst];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + degree[v];
  incident_.assign(offsets_[n], 0);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    incident_[cursor[edges_[i].src]++] = i;
    incident_[cursor[edges_[i].dst]++] = i;
  }
}

namespace {

struct KeyIndex {
  std::unordered_map<std::string, std::size_t> ids;
  std::size_t id(const std::string& key) { return ids.try_emplace(key, ids.size()).first->second; }
};

BipartiteGraph assemble(const std::vector<std::size_t>& src_local, const std::vector<std::size_t>& dst_local,
                        std::size_t n_src, std::size_t n_dst, const std::vector<std::size_t>& records,
                        const std::vector<int>& labels) {
  std::vector<Edge> edges(src_local.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = Edge{src_local[i], n_src + dst_local[i], records[i], labels[i]};
  }
  return BipartiteGraph(n_src, n_dst, std::move(edges));
}

}  // namespace

BipartiteGraph build_bipartite(std::span<const FlowRecord> records, std::span<const std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("build_bipartite: no records");
  KeyIndex sources, destinations;
  std::vector<std::size_t> src, dst, rec;
  std::vector<int> labels;
  for (std::size_t r : subset) {
    const auto& f = records[r];
    src.push_back(sources.id(f.src_key));
    dst.push_back(destinations.id(f.dst_key));
    rec.push_back(r);
    labels.push_back(f.label);
  }
  return assemble(src, dst, sources.ids.size(), destinations.ids.size(), rec, labels);
}

BipartiteGraph build_bipartite(std::span<const FlowRecord> records) {
  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return build_bipartite(records, all);
}

BipartiteGraph build_bipartite(std::span<const std::string> src_keys, std::span<const std::string> dst_keys,
                               std::span<const int> labels) {
  if (src_keys.size() != dst_keys.size() || (!labels.empty() && labels.size() != src_keys.size())) {
    throw std::invalid_argument("build_bipartite: key and label lengths differ");
  }
  if (src_keys.empty()) throw std::invalid_argument("build_bipartite: no records");
  KeyIndex sources, destinations;
  std::vector<std::size_t> src, dst, rec;
  std::vector<int> lab;
  for (std::size_t i = 0; i < src_keys.size(); ++i) {
    src.push_back(sources.id(src_keys[i]));
    dst.push_back(destinations.id(dst_keys[i]));
    rec.push_back(i);
    lab.push_back(labels.empty() ? 0 : labels[i]);
  }
  return assemble(src, dst, sources.ids.size(), destinations.ids.size(), rec, lab);
}

BipartiteGraph augment_virtual_nodes(const BipartiteGraph& g, std::uint64_t seed) {
  const std::size_t ns = g.num_sources();
  const std::size_t nd = g.num_destinations();
  if (ns == nd) return g;

  Rng rng = make_rng(seed);
  const std::size_t side = std::max(ns, nd);
  std::uniform_int_distribution<std::size_t> pick(0, side - 1);
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  if (ns < nd) {
    // Sources padded to |D|; destination ids shift with the new |S|.
    for (auto& e : edges) {
      e.src = pick(rng);
      e.dst = e.dst - ns + side;
    }
    return BipartiteGraph(side, nd, std::move(edges), g.virtual_sources() + (side - ns), g.virtual_destinations());
  }
  for (auto& e : edges) e.dst = ns + pick(rng);
  return BipartiteGraph(ns, side, std::move(edges), g.virtual_sources(), g.virtual_destinations() + (side - nd));
}

std::uint64_t line_edge_count(const BipartiteGraph& g) {
  std::uint64_t total = 0;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    const std::uint64_t d = g.degree(v);
    total += d * (d - (d > 0 ? 1 : 0)) / 2;
  }
  return total;
}

std::vector<std::size_t> line_neighbors(const BipartiteGraph& g, std::size_t e) {
  const Edge& edge = g.edge(e);
  auto a = g.incident(edge.src);
  auto b = g.incident(edge.dst);
  std::vector<std::size_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::remove(out.begin(), out.end(), e), out.end());
  return out;
}

LineGraph::LineGraph(std::vector<std::size_t> records, std::vector<int> labels, std::vector<std::size_t> offsets,
                     std::vector<std::size_t> neighbors)
    : records_(std::move(records)),
      labels_(std::move(labels)),
      offsets_(std::move(offsets)),
      neighbors_(std::move(neighbors)) {}

LineGraph build_line_graph(const BipartiteGraph& g, std::uint64_t max_edges) {
  const std::uint64_t predicted = line_edge_count(g);
  if (predicted > max_edges) {
    throw CapacityError("line graph would hold up to " + std::to_string(predicted) + " edges, cap is " +
                        std::to_string(max_edges));
  }
  std::vector<std::size_t> records(g.num_edges());
  std::vector<int> labels(g.num_edges());
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> neighbors;
  neighbors.reserve(2 * predicted);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    records[e] = g.edge(e).record;
    labels[e] = g.edge(e).label;
    auto adj = line_neighbors(g, e);
    neighbors.insert(neighbors.end(), adj.begin(), adj.end());
    offsets.push_back(neighbors.size());
  }
  return LineGraph(std::move(records), std::move(labels), std::move(offsets), std::move(neighbors));
}

std::vector<std::pair<std::size_t, std::size_t>> degree_histogram(const BipartiteGraph& g) {
  std::map<std::size_t, std::size_t> hist;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) ++hist[g.degree(v)];
  return {hist.begin(), hist.end()};
}

namespace {

constexpr std::array<char, 8> kGraphMagic{'F', 'G', 'N', 'N', 'C', 'S', 'R', '1'};

void put(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error("graph cache truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void save_graph(const BipartiteGraph& g, std::uint64_t seed, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(kGraphMagic.data(), kGraphMagic.size());
    put(out, 1);  // version
    put(out, g.num_sources());
    put(out, g.num_destinations());
    put(out, g.virtual_sources());
    put(out, g.virtual_destinations());
    put(out, g.num_edges());
    put(out, seed);
    for (const auto& e : g.edges()) {
      put(out, e.src);
      put(out, e.dst);
      put(out, e.record);
      put(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(e.label)));
    }
    for (auto o : g.offsets()) put(out, o);
    for (auto i : g.incidence()) put(out, i);
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

BipartiteGraph load_graph(const std::filesystem::path& path, std::uint64_t* seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open graph cache " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (magic != kGraphMagic) throw Error(path.string() + " is not a graph cache");
  if (get(in) != 1) throw Error("unsupported graph cache version");
  const auto ns = get(in), nd = get(in), vs = get(in), vd = get(in), ne = get(in), s = get(in);
  std::vector<Edge> edges(ne);
  for (auto& e : edges) {
    e.src = get(in);
    e.dst = get(in);
    e.record = get(in);
    e.label = static_cast<int>(static_cast<std::int64_t>(get(in)));
  }
  BipartiteGraph g(ns, nd, std::move(edges), vs, vd);
  for (auto o : g.offsets()) {
    if (get(in) != o) throw Error("graph cache CSR offsets disagree with its edge list");
  }
  for (auto i : g.incidence()) {
    if (get(in) != i) throw Error("graph cache CSR incidence disagrees with its edge list");
  }
  if (seed) *seed = s;
  return g;
}

}  // namespace flowgnn
