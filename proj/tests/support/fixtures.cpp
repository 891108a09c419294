#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "flowgnn/ingest.hpp"
#include "flowgnn/rng.hpp"

namespace fixture {

using namespace flowgnn;

Instance small_instance(std::mt19937_64& rng, std::size_t max_edges, std::size_t features) {
  Instance inst;
  const std::size_t ns = 1 + rng() % 4, nd = 1 + rng() % 4;
  const std::size_t m = 2 + rng() % (max_edges - 1);
  inst.graph = oracle::random_bipartite(rng, ns, nd, m);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  inst.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(features));
  for (Eigen::Index i = 0; i < inst.features.size(); ++i) inst.features.data()[i] = u(rng);
  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(1 + rng() % m);
  inst.batch = all;
  return inst;
}

ModelConfig small_config(Variant v, std::size_t edges, int layers, std::uint64_t seed) {
  ModelConfig c;
  c.variant = v;
  c.set_layers(layers);
  c.hidden = 5;
  c.heads = 2;
  c.head_dim = 3;
  c.sample_size = static_cast<int>(2 * edges);
  c.hops = uses_line_graph(v) ? static_cast<int>(edges) : layers;
  c.seed = seed;
  return c;
}

namespace {

const ad::Parameter& find(std::vector<ad::Parameter*>& params, const std::string& name) {
  for (auto* p : params) {
    if (p->name == name) return *p;
  }
  throw std::logic_error("no parameter " + name);
}

}  // namespace

oracle::Mat naive_logits(Model& model, const Instance& inst) {
  auto params = model.parameters();
  const oracle::Mat x = oracle::to_mat(inst.features);
  const oracle::Mat classifier = oracle::to_mat(find(params, "classifier.weight").value);
  const ModelConfig& c = model.config();
  if (!uses_line_graph(c.variant)) {
    std::vector<oracle::Mat> weights;
    for (int k = 1; k <= c.sage_layers; ++k) {
      weights.push_back(oracle::to_mat(find(params, "sage.layer" + std::to_string(k) + ".weight").value));
    }
    return oracle::naive_sage_logits(inst.graph, x, inst.batch, weights, classifier,
                                     c.variant == Variant::kEGraphSageModified);
  }
  std::vector<std::vector<oracle::NaiveHead>> heads;
  for (int k = 1; k <= c.gat_layers; ++k) {
    std::vector<oracle::NaiveHead> layer;
    for (int m = 1; m <= c.heads; ++m) {
      const std::string prefix = "gat.layer" + std::to_string(k) + ".head" + std::to_string(m);
      oracle::NaiveHead h;
      h.weight = oracle::to_mat(find(params, prefix + ".weight").value);
      for (const auto& row : oracle::to_mat(find(params, prefix + ".attention").value)) h.attention.push_back(row[0]);
      layer.push_back(std::move(h));
    }
    heads.push_back(std::move(layer));
  }
  return oracle::naive_gat_logits(inst.graph, x, inst.batch, heads, classifier, c.variant == Variant::kEResGat);
}

double max_abs_diff(const ad::Matrix& a, const oracle::Mat& b) {
  if (static_cast<std::size_t>(a.rows()) != b.size()) return INFINITY;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (static_cast<std::size_t>(a.cols()) != b[i].size()) return INFINITY;
    for (Eigen::Index j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
  }
  return worst;
}

Dataset synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  const SyntheticTable t = generate_synthetic(spec);
  std::ostringstream csv;
  for (std::size_t i = 0; i < t.header.size(); ++i) csv << (i ? "," : "") << t.header[i];
  csv << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) csv << (i ? "," : "") << r[i];
    csv << '\n';
  }
  Schema schema;
  schema.src_ip = "src_ip";
  schema.src_port = "src_port";
  schema.dst_ip = "dst_ip";
  schema.dst_port = "dst_port";
  schema.label = "label";
  schema.normal_label = "Normal";
  if (spec.protocol_column) schema.categorical = {"proto"};
  std::istringstream in(csv.str());
  FlowTable table = parse_flows(in, schema);

  auto [labels, encoded] = encode_labels(std::move(table.records), schema.normal_label);
  table.records = std::move(encoded);
  const DatasetSplit split = split_dataset(table.records.size(), derive_seed(seed, SeedRole::kSplit));
  CategoricalEncoder::fit(table, split.train).apply(table);
  auto [norm, records] = fit_apply_normalizer(std::move(table.records), split.train);

  Dataset d;
  d.graph = augment_virtual_nodes(build_bipartite(records), derive_seed(seed, SeedRole::kAugment));
  d.features.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(records[0].features.size()));
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t j = 0; j < records[r].features.size(); ++j) {
      d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = records[r].features[j];
    }
    d.labels.push_back(records[r].label);
  }
  d.classes = labels.size();
  d.train = split.train;
  d.validation = split.validation;
  d.test = split.test;
  return d;
}

}  // namespace fixture
