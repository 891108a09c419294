#include "flowgnn/models.hpp"

#include <algorithm>
#include <stdexcept>

#include "flowgnn/error.hpp"

namespace flowgnn {

namespace {

constexpr std::pair<Variant, const char*> kVariantNames[] = {
    {Variant::kEGraphSage, "egraphsage"},
    {Variant::kEGraphSageModified, "egraphsage_modified"},
    {Variant::kGat, "gat"},
    {Variant::kEResGat, "eresgat"},
};

ad::Matrix gather_features(const GraphInputs& inputs, std::span<const std::size_t> edges) {
  const auto& g = *inputs.graph;
  const auto& x = *inputs.features;
  ad::Matrix out(static_cast<Eigen::Index>(edges.size()), x.cols());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(g.edge(edges[i]).record));
  }
  return out;
}

std::size_t position_in(const std::vector<std::size_t>& sorted, std::size_t value) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), value);
  if (it == sorted.end() || *it != value) throw std::logic_error("edge missing from neighborhood layer");
  return static_cast<std::size_t>(it - sorted.begin());
}

}  // namespace

std::string variant_name(Variant v) {
  for (const auto& [variant, name] : kVariantNames) {
    if (variant == v) return name;
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  std::string valid;
  for (const auto& [variant, n] : kVariantNames) {
    if (name == n) return variant;
    valid += (valid.empty() ? "" : ", ") + std::string(n);
  }
  throw ConfigError("unknown variant '" + name + "' (valid: " + valid + ")");
}

bool uses_line_graph(Variant v) { return v == Variant::kGat || v == Variant::kEResGat; }

SageConfig ModelConfig::sage() const {
  SageConfig c;
  c.layers = sage_layers;
  c.hidden = hidden;
  c.modified = variant == Variant::kEGraphSageModified;
  return c;
}

GatConfig ModelConfig::gat() const {
  GatConfig c;
  c.layers = gat_layers;
  c.heads = heads;
  c.head_dim = head_dim;
  c.residual = variant == Variant::kEResGat;
  c.dropout = dropout;
  c.self_loops = self_loops;
  return c;
}

void ModelConfig::set_layers(int n) {
  if (uses_line_graph(variant)) {
    gat_layers = n;
  } else {
    sage_layers = n;
  }
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  positive(sage_layers, "layers");
  positive(gat_layers, "layers");
  positive(hidden, "hidden");
  positive(heads, "heads");
  positive(head_dim, "head_dim");
  positive(sample_size, "sample_size");
  positive(hops, "hops");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (!uses_line_graph(variant) && hops != sage_layers) {
    throw ConfigError("E-GraphSAGE samples one hop per layer: hops (" + std::to_string(hops) +
                      ") must equal layers (" + std::to_string(sage_layers) + ")");
  }
}

ModelConfig ModelConfig::from_kv(const KeyValues& kv) {
  kv.require_known({"variant", "layers", "hidden", "heads", "head_dim", "dropout", "self_loops", "sample_size",
                    "hops", "line_node_cap", "seed", "aggregator"});
  ModelConfig c;
  if (auto v = kv.get("variant")) c.variant = parse_variant(*v);
  if (kv.has("layers")) c.set_layers(static_cast<int>(kv.get_int("layers", 0)));
  c.hidden = static_cast<int>(kv.get_int("hidden", c.hidden));
  c.heads = static_cast<int>(kv.get_int("heads", c.heads));
  c.head_dim = static_cast<int>(kv.get_int("head_dim", c.head_dim));
  c.dropout = kv.get_double("dropout", c.dropout);
  c.self_loops = kv.get_bool("self_loops", c.self_loops);
  c.sample_size = static_cast<int>(kv.get_int("sample_size", c.sample_size));
  c.hops = static_cast<int>(kv.get_int("hops", uses_line_graph(c.variant) ? c.hops : c.sage_layers));
  c.line_node_cap = static_cast<std::size_t>(kv.get_int("line_node_cap", static_cast<std::int64_t>(c.line_node_cap)));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  if (auto a = kv.get("aggregator"); a && *a != "mean") {
    throw ConfigError("unsupported aggregator '" + *a + "' (valid: mean)");
  }
  return c;
}

ad::Tensor sage_layer(const ad::Tensor& node_states, const ad::Tensor& messages, const ad::Groups& neighborhoods,
                      const ad::Tensor& weight, Aggregator aggregator) {
  if (static_cast<std::size_t>(node_states.rows()) != neighborhoods.size()) {
    throw ShapeError("sage_layer: " + std::to_string(node_states.rows()) + " node rows for " +
                     std::to_string(neighborhoods.size()) + " neighborhoods");
  }
  ad::Tensor aggregated;
  switch (aggregator) {
    case Aggregator::kMean:
      aggregated = ad::row_mean_groups(messages, neighborhoods);
      break;
  }
  const ad::Tensor parts[] = {node_states, aggregated};
  return ad::activation(ad::matmul(ad::concat_cols(parts), weight), ad::Activation::relu());
}

ad::Tensor edge_embedding(const ad::Tensor& u_states, const ad::Tensor& v_states, const ad::Tensor& raw_edges,
                          bool modified) {
  if (modified) {
    const ad::Tensor parts[] = {u_states, v_states, raw_edges};
    return ad::concat_cols(parts);
  }
  const ad::Tensor parts[] = {u_states, v_states};
  return ad::concat_cols(parts);
}

AttentionPairs AttentionPairs::from_neighborhood(const LineNeighborhood& nb) {
  AttentionPairs p;
  p.num_nodes = nb.size();
  p.src.reserve(nb.neighbors.size());
  p.dst.reserve(nb.neighbors.size());
  std::vector<std::size_t> members;
  for (std::size_t v = 0; v < nb.size(); ++v) {
    members.clear();
    for (std::size_t u : nb.neighbors_of(v)) {
      members.push_back(p.src.size());
      p.src.push_back(u);
      p.dst.push_back(v);
    }
    p.by_target.add(members);
  }
  return p;
}

ad::Tensor attention_logits(const ad::Tensor& transformed, const AttentionPairs& pairs, const ad::Tensor& attention) {
  const ad::Tensor parts[] = {ad::gather_rows(transformed, pairs.src), ad::gather_rows(transformed, pairs.dst)};
  return ad::activation(ad::matmul(ad::concat_cols(parts), attention), ad::Activation::leaky_relu(0.2));
}

ad::Tensor attention_coefficients(const ad::Tensor& transformed, const AttentionPairs& pairs,
                                  const ad::Tensor& attention) {
  return ad::masked_softmax(attention_logits(transformed, pairs, attention), pairs.by_target);
}

ad::Tensor resgat_layer(const ad::Tensor& states, const ad::Tensor& raw_features, const AttentionPairs& pairs,
                        std::span<const ad::Tensor> head_weights, std::span<const ad::Tensor> head_attention,
                        const ResGatLayerOptions& options) {
  if (head_weights.empty() || head_weights.size() != head_attention.size()) {
    throw std::invalid_argument("resgat_layer: need one weight and one attention vector per head");
  }
  for (std::size_t v = 0; v < pairs.by_target.size(); ++v) {
    if (pairs.by_target.group(v).empty()) {
      throw std::invalid_argument("resgat_layer: node " + std::to_string(v) + " has an empty neighborhood");
    }
  }
  std::vector<ad::Tensor> heads;
  for (std::size_t m = 0; m < head_weights.size(); ++m) {
    ad::Tensor wh = ad::matmul(states, head_weights[m]);
    ad::Tensor alpha = attention_coefficients(wh, pairs, head_attention[m]);
    if (options.observer && *options.observer) {
      (*options.observer)(AttentionRecord{options.layer, static_cast<int>(m), &pairs.by_target, &alpha.value()});
    }
    if (options.training && options.dropout > 0.0) {
      if (options.rng == nullptr) throw std::invalid_argument("resgat_layer: dropout needs an rng");
      alpha = ad::dropout(alpha, options.dropout, true, *options.rng);
    }
    ad::Tensor agg = ad::weighted_scatter_sum(alpha, wh, pairs.src, pairs.dst, pairs.num_nodes);
    heads.push_back(ad::activation(agg, ad::Activation::elu(1.0)));
  }
  ad::Tensor combined = options.average_heads ? ad::mean_of(heads) : ad::concat_cols(heads);
  if (!options.residual) return combined;
  if (raw_features.rows() != combined.rows()) {
    throw ShapeError("resgat_layer: residual block has " + std::to_string(raw_features.rows()) + " rows, states have " +
                     std::to_string(combined.rows()));
  }
  const ad::Tensor parts[] = {combined, raw_features};
  return ad::concat_cols(parts);
}

// ---------------------------------------------------------------- SageModel

SageModel::SageModel(const SageConfig& config, std::size_t feature_dim, std::size_t num_classes, std::uint64_t seed)
    : config_(config), feature_dim_(feature_dim), num_classes_(num_classes) {
  if (config.layers < 1 || config.hidden < 1) throw ConfigError("sage model needs layers >= 1 and hidden >= 1");
  const auto f = static_cast<Eigen::Index>(feature_dim);
  const auto h = static_cast<Eigen::Index>(config.hidden);
  Rng rng = make_rng(seed);
  for (int k = 1; k <= config.layers; ++k) {
    const Eigen::Index in = k == 1 ? 2 * f : 2 * h + f;
    layers_.emplace_back("sage.layer" + std::to_string(k) + ".weight", in, h);
    ad::glorot_uniform(layers_.back(), rng);
  }
  classifier_ = ad::Parameter("classifier.weight", static_cast<Eigen::Index>(embedding_width()),
                              static_cast<Eigen::Index>(num_classes));
  ad::glorot_uniform(classifier_, rng);
}

std::size_t SageModel::embedding_width() const {
  return 2 * static_cast<std::size_t>(config_.hidden) + (config_.modified ? feature_dim_ : 0);
}

std::vector<ad::Parameter*> SageModel::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& p : layers_) out.push_back(&p);
  out.push_back(&classifier_);
  return out;
}

ad::Tensor SageModel::node_states(ad::Tape& tape, const GraphInputs& inputs, const BatchNeighborhood& nb) {
  if (nb.depth() != config_.layers) {
    throw ShapeError("sage model has " + std::to_string(config_.layers) + " layers but the neighborhood has " +
                     std::to_string(nb.depth()) + " hops");
  }
  const auto& g = *inputs.graph;
  const auto& widest = nb.layers[0];
  ad::Tensor raw = tape.constant(gather_features(inputs, widest));

  ad::Tensor prev;
  const HopSample* prev_hop = nullptr;
  for (int k = 1; k <= config_.layers; ++k) {
    const HopSample& hop = nb.hops[static_cast<std::size_t>(k - 1)];
    ad::Tensor self_states;
    ad::Tensor messages;
    ad::Groups groups;
    if (k == 1) {
      self_states = tape.constant(ad::Matrix::Ones(static_cast<Eigen::Index>(hop.nodes.size()),
                                                   static_cast<Eigen::Index>(feature_dim_)));
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < hop.nodes.size(); ++i) {
        members.clear();
        for (std::size_t e : hop.neighbors(i)) members.push_back(position_in(widest, e));
        groups.add(members);
      }
      messages = raw;
    } else {
      std::vector<std::size_t> self_rows;
      for (std::size_t v : hop.nodes) self_rows.push_back(prev_hop->row_of(v));
      self_states = ad::gather_rows(prev, self_rows);
      std::vector<std::size_t> opposite_rows, edge_rows, members;
      for (std::size_t i = 0; i < hop.nodes.size(); ++i) {
        members.clear();
        for (std::size_t e : hop.neighbors(i)) {
          members.push_back(edge_rows.size());
          opposite_rows.push_back(prev_hop->row_of(g.opposite(e, hop.nodes[i])));
          edge_rows.push_back(position_in(widest, e));
        }
        groups.add(members);
      }
      const ad::Tensor parts[] = {ad::gather_rows(prev, opposite_rows), ad::gather_rows(raw, edge_rows)};
      messages = ad::concat_cols(parts);
    }
    prev = sage_layer(self_states, messages, groups, tape.parameter(layers_[static_cast<std::size_t>(k - 1)]),
                      config_.aggregator);
    prev_hop = &hop;
  }
  return prev;
}

ForwardOutput SageModel::forward(ad::Tape& tape, const GraphInputs& inputs, const BatchNeighborhood& nb) {
  ad::Tensor states = node_states(tape, inputs, nb);
  const HopSample& last = nb.hops.back();
  const auto& g = *inputs.graph;
  std::vector<std::size_t> u_rows, v_rows;
  for (std::size_t e : nb.batch) {
    u_rows.push_back(last.row_of(g.edge(e).src));
    v_rows.push_back(last.row_of(g.edge(e).dst));
  }
  ad::Tensor raw = tape.constant(gather_features(inputs, nb.batch));
  ForwardOutput out;
  out.embedding = edge_embedding(ad::gather_rows(states, u_rows), ad::gather_rows(states, v_rows), raw,
                                 config_.modified);
  out.logits = ad::matmul(out.embedding, tape.parameter(classifier_));
  return out;
}

// ----------------------------------------------------------------- GatModel

GatModel::GatModel(const GatConfig& config, std::size_t feature_dim, std::size_t num_classes, std::uint64_t seed)
    : config_(config), feature_dim_(feature_dim), num_classes_(num_classes) {
  if (config.layers < 1 || config.heads < 1 || config.head_dim < 1) {
    throw ConfigError("attention model needs layers, heads and head_dim >= 1");
  }
  Rng rng = make_rng(seed);
  const auto hd = static_cast<Eigen::Index>(config.head_dim);
  for (int k = 0; k < config.layers; ++k) {
    const auto in = static_cast<Eigen::Index>(k == 0 ? feature_dim : layer_width(k - 1));
    std::vector<AttentionHead> heads;
    for (int m = 0; m < config.heads; ++m) {
      const std::string prefix = "gat.layer" + std::to_string(k + 1) + ".head" + std::to_string(m + 1);
      AttentionHead head{ad::Parameter(prefix + ".weight", in, hd), ad::Parameter(prefix + ".attention", 2 * hd, 1)};
      ad::glorot_uniform(head.weight, rng);
      ad::glorot_uniform(head.attention, rng);
      heads.push_back(std::move(head));
    }
    layers_.push_back(std::move(heads));
  }
  classifier_ = ad::Parameter("classifier.weight", static_cast<Eigen::Index>(embedding_width()),
                              static_cast<Eigen::Index>(num_classes));
  ad::glorot_uniform(classifier_, rng);
}

std::size_t GatModel::layer_width(int layer) const {
  const auto hd = static_cast<std::size_t>(config_.head_dim);
  const bool last = layer == config_.layers - 1;
  if (config_.residual) return static_cast<std::size_t>(config_.heads) * hd + feature_dim_;
  return last ? hd : static_cast<std::size_t>(config_.heads) * hd;
}

std::size_t GatModel::embedding_width() const { return layer_width(config_.layers - 1); }

std::vector<ad::Parameter*> GatModel::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& layer : layers_) {
    for (auto& head : layer) {
      out.push_back(&head.weight);
      out.push_back(&head.attention);
    }
  }
  out.push_back(&classifier_);
  return out;
}

ForwardOutput GatModel::forward(ad::Tape& tape, const GraphInputs& inputs, const LineNeighborhood& nb,
                                const ForwardOptions& options) {
  ad::Tensor raw = tape.constant(gather_features(inputs, nb.nodes));
  const AttentionPairs pairs = AttentionPairs::from_neighborhood(nb);
  last_states_.clear();
  ad::Tensor states = raw;
  for (int k = 0; k < config_.layers; ++k) {
    std::vector<ad::Tensor> weights, attention;
    for (auto& head : layers_[static_cast<std::size_t>(k)]) {
      weights.push_back(tape.parameter(head.weight));
      attention.push_back(tape.parameter(head.attention));
    }
    ResGatLayerOptions lo;
    lo.residual = config_.residual;
    lo.average_heads = !config_.residual && k == config_.layers - 1;
    lo.dropout = config_.dropout;
    lo.training = options.training;
    lo.rng = options.dropout_rng;
    lo.layer = k;
    lo.observer = &options.observer;
    states = resgat_layer(states, raw, pairs, weights, attention, lo);
    last_states_.push_back(states);
  }
  ForwardOutput out;
  out.embedding = ad::gather_rows(states, nb.batch_rows);
  out.logits = ad::matmul(out.embedding, tape.parameter(classifier_));
  return out;
}

// -------------------------------------------------------------------- Model

namespace {

std::variant<SageModel, GatModel> make_impl(const ModelConfig& c, std::size_t f, std::size_t classes) {
  c.validate();
  if (uses_line_graph(c.variant)) return GatModel(c.gat(), f, classes, c.seed);
  return SageModel(c.sage(), f, classes, c.seed);
}

}  // namespace

Model::Model(const ModelConfig& config, std::size_t feature_dim, std::size_t num_classes)
    : config_(config),
      feature_dim_(feature_dim),
      num_classes_(num_classes),
      impl_(make_impl(config, feature_dim, num_classes)) {}

ForwardOutput Model::forward(ad::Tape& tape, const GraphInputs& inputs, std::span<const std::size_t> batch,
                             std::uint64_t sampling_seed, const ForwardOptions& options) {
  if (static_cast<std::size_t>(inputs.features->cols()) != feature_dim_) {
    throw ShapeError("model expects " + std::to_string(feature_dim_) + " features, data has " +
                     std::to_string(inputs.features->cols()));
  }
  if (auto* s = sage()) {
    auto nb = sample_khop(*inputs.graph, batch, config_.sage_layers, config_.sample_size, sampling_seed);
    return s->forward(tape, inputs, nb);
  }
  LineNeighborhoodOptions lo{config_.self_loops, config_.line_node_cap};
  auto nb = full_line_neighborhood(*inputs.graph, batch, config_.hops, lo);
  return gat()->forward(tape, inputs, nb, options);
}

std::vector<ad::Parameter*> Model::parameters() {
  return std::visit([](auto& m) { return m.parameters(); }, impl_);
}

std::size_t Model::embedding_width() const {
  return std::visit([](const auto& m) { return m.embedding_width(); }, impl_);
}

}  // namespace flowgnn
