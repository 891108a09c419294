#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flowgnn/autodiff.hpp"
#include "flowgnn/config.hpp"
#include "flowgnn/graph.hpp"
#include "flowgnn/sampling.hpp"

namespace flowgnn {

enum class Variant { kEGraphSage, kEGraphSageModified, kGat, kEResGat };

std::string variant_name(Variant v);
// Throws ConfigError listing the valid names.
Variant parse_variant(const std::string& name);
bool uses_line_graph(Variant v);

// Only mean aggregation is implemented; the enum is the extension point.
enum class Aggregator { kMean };

struct SageConfig {
  int layers = 2;
  int hidden = 128;
  bool modified = true;
  Aggregator aggregator = Aggregator::kMean;
};

struct GatConfig {
  int layers = 3;
  int heads = 6;
  int head_dim = 16;
  bool residual = true;
  double dropout = 0.0;
  bool self_loops = true;
};

struct ModelConfig {
  Variant variant = Variant::kEGraphSageModified;
  int sage_layers = 2;
  int hidden = 128;
  int gat_layers = 3;
  int heads = 6;
  int head_dim = 16;
  double dropout = 0.0;
  bool self_loops = true;
  int sample_size = 8;
  int hops = 2;
  std::size_t line_node_cap = 200'000;
  std::uint64_t seed = 0;

  SageConfig sage() const;
  GatConfig gat() const;
  int layers() const { return uses_line_graph(variant) ? gat_layers : sage_layers; }
  void set_layers(int n);
  void validate() const;

  // Keys: variant, layers, hidden, heads, head_dim, dropout, self_loops,
  // sample_size, hops, line_node_cap, seed, aggregator.
  static ModelConfig from_kv(const KeyValues& kv);
};

// Features are indexed by record: row r holds the flow behind every edge
// whose `record` field is r.
struct GraphInputs {
  const BipartiteGraph* graph = nullptr;
  const ad::Matrix* features = nullptr;
};

struct AttentionRecord {
  int layer = 0;
  int head = 0;
  const ad::Groups* groups = nullptr;
  const ad::Matrix* coefficients = nullptr;  // [pairs x 1], before dropout
};
using AttentionObserver = std::function<void(const AttentionRecord&)>;

struct ForwardOptions {
  bool training = false;
  Rng* dropout_rng = nullptr;
  AttentionObserver observer;
};

struct ForwardOutput {
  ad::Tensor logits;     // [batch x classes]
  ad::Tensor embedding;  // [batch x embedding_width], pre-classifier
};

// h_v' = relu(W [h_v || mean_{m in N(v)} msg_m]). Row v of `node_states`
// pairs with group v of `neighborhoods`, whose members index `messages`.
ad::Tensor sage_layer(const ad::Tensor& node_states, const ad::Tensor& messages, const ad::Groups& neighborhoods,
                      const ad::Tensor& weight, Aggregator aggregator = Aggregator::kMean);

// h_u || h_v, or h_u || h_v || e_uv for the modified variant.
ad::Tensor edge_embedding(const ad::Tensor& u_states, const ad::Tensor& v_states, const ad::Tensor& raw_edges,
                          bool modified);

// Directed attention pairs (u -> v) grouped by target v. Pairs of group v
// are contiguous and their index is the pair position.
struct AttentionPairs {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  ad::Groups by_target;
  std::size_t num_nodes = 0;

  static AttentionPairs from_neighborhood(const LineNeighborhood& nb);
};

// leaky_relu(a . [Wh_u || Wh_v], 0.2) per pair; `transformed` holds Wh.
ad::Tensor attention_logits(const ad::Tensor& transformed, const AttentionPairs& pairs, const ad::Tensor& attention);
// Softmax of attention_logits within each target's neighborhood.
ad::Tensor attention_coefficients(const ad::Tensor& transformed, const AttentionPairs& pairs,
                                  const ad::Tensor& attention);

struct AttentionHead {
  ad::Parameter weight;     // [in x head_dim]
  ad::Parameter attention;  // [2 * head_dim x 1]
};

struct ResGatLayerOptions {
  bool residual = true;
  bool average_heads = false;
  double dropout = 0.0;
  bool training = false;
  Rng* rng = nullptr;
  int layer = 0;
  const AttentionObserver* observer = nullptr;
};

// Per head m: elu(sum_u alpha^m_uv W^m h_u). Heads are concatenated (or
// averaged when options.average_heads); with options.residual the raw
// features are appended unchanged.
ad::Tensor resgat_layer(const ad::Tensor& states, const ad::Tensor& raw_features, const AttentionPairs& pairs,
                        std::span<const ad::Tensor> head_weights, std::span<const ad::Tensor> head_attention,
                        const ResGatLayerOptions& options);

// Original and modified E-GraphSAGE over sampled bipartite neighborhoods.
// Layer 1 aggregates raw edge features into all-ones node states; deeper
// layers aggregate h_u || e_uv over each sampled edge uv.
class SageModel {
 public:
  SageModel(const SageConfig& config, std::size_t feature_dim, std::size_t num_classes, std::uint64_t seed);

  ForwardOutput forward(ad::Tape& tape, const GraphInputs& inputs, const BatchNeighborhood& nb);

  std::vector<ad::Parameter*> parameters();
  std::size_t embedding_width() const;
  const SageConfig& config() const { return config_; }

  // Final-layer node states for `nb`, rows ordered as nb.hops[K-1].nodes.
  ad::Tensor node_states(ad::Tape& tape, const GraphInputs& inputs, const BatchNeighborhood& nb);

 private:
  SageConfig config_;
  std::size_t feature_dim_;
  std::size_t num_classes_;
  std::vector<ad::Parameter> layers_;
  ad::Parameter classifier_;
};

// GAT baseline (residual = false) and E-ResGAT over line-graph
// neighborhoods. Every layer runs over all nodes of the neighborhood using
// its induced adjacency; only batch rows are classified.
class GatModel {
 public:
  GatModel(const GatConfig& config, std::size_t feature_dim, std::size_t num_classes, std::uint64_t seed);

  ForwardOutput forward(ad::Tape& tape, const GraphInputs& inputs, const LineNeighborhood& nb,
                        const ForwardOptions& options = {});

  std::vector<ad::Parameter*> parameters();
  std::size_t embedding_width() const;
  std::size_t layer_width(int layer) const;
  const GatConfig& config() const { return config_; }
  // Per-layer node states of the last forward pass (for inspection).
  const std::vector<ad::Tensor>& last_states() const { return last_states_; }

 private:
  GatConfig config_;
  std::size_t feature_dim_;
  std::size_t num_classes_;
  std::vector<std::vector<AttentionHead>> layers_;
  ad::Parameter classifier_;
  std::vector<ad::Tensor> last_states_;
};

class Model {
 public:
  Model(const ModelConfig& config, std::size_t feature_dim, std::size_t num_classes);

  // Builds the batch neighborhood (sampled or full line) and runs forward.
  ForwardOutput forward(ad::Tape& tape, const GraphInputs& inputs, std::span<const std::size_t> batch,
                        std::uint64_t sampling_seed, const ForwardOptions& options = {});

  std::vector<ad::Parameter*> parameters();
  std::size_t embedding_width() const;
  const ModelConfig& config() const { return config_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_classes() const { return num_classes_; }

  SageModel* sage() { return std::get_if<SageModel>(&impl_); }
  GatModel* gat() { return std::get_if<GatModel>(&impl_); }

 private:
  ModelConfig config_;
  std::size_t feature_dim_;
  std::size_t num_classes_;
  std::variant<SageModel, GatModel> impl_;
};

}  // namespace flowgnn
