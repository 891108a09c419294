#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowgnn/autodiff.hpp"
#include "flowgnn/config.hpp"
#include "flowgnn/metrics.hpp"
#include "flowgnn/models.hpp"

namespace flowgnn {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update, then gradients are zeroed. A parameter
// without a gradient throws std::logic_error.
void adam_step(std::span<ad::Parameter* const> params, const AdamConfig& config);

enum class Task { kMulti, kBinary };

struct TrainConfig {
  std::size_t batch_size = 500;
  int epochs = 2;
  AdamConfig adam;
  std::uint64_t seed = 0;
  Task task = Task::kMulti;
  // Build the training graph from training edges only; evaluation graphs
  // attach the evaluated edges.
  bool inductive = false;
  std::string preset;

  // Per-dataset learning rates: UNSW-NB15 0.007, CIC-DarkNet 0.003,
  // CSE-CIC-IDS 0.003, ToN-IoT 0.01.
  static std::optional<double> preset_lr(const std::string& dataset);
  // Keys: batch_size, epochs, lr, preset, beta1, beta2, eps, seed, task,
  // inductive. An explicit lr overrides the preset.
  static TrainConfig from_kv(const KeyValues& kv);
  void validate() const;
};

// Everything a training or evaluation pass reads. Labels are per record
// and already collapsed for binary tasks.
struct TrainingData {
  const BipartiteGraph* graph = nullptr;
  const ad::Matrix* features = nullptr;
  std::span<const int> labels;
  std::size_t num_classes = 0;

  GraphInputs inputs() const { return {graph, features}; }
};

struct EpochTrace {
  int epoch = 0;
  std::vector<double> losses;
  std::vector<double> seconds;
};

// Optional per-batch hook, called after the forward pass.
using BatchHook = std::function<void(std::size_t batch_index, const ForwardOutput&)>;

// Shuffles `train_edges` (seeded by config.seed and epoch), then per batch:
// neighborhood -> forward -> cross-entropy -> backward -> Adam step.
EpochTrace train_epoch(Model& model, const TrainingData& data, std::span<const std::size_t> train_edges,
                       const TrainConfig& config, int epoch, const ForwardOptions& options = {},
                       const BatchHook& hook = {});

struct Predictions {
  std::vector<std::size_t> edges;
  std::vector<int> truth;
  std::vector<int> predicted;
  ad::Matrix embeddings;  // filled when requested
};

// Evaluation-mode forward passes (dropout off) over `edges` in batches.
Predictions predict(Model& model, const TrainingData& data, std::span<const std::size_t> edges,
                    const TrainConfig& config, bool keep_embeddings = false);

enum class EvalMode { kMulti, kBinary };

// Binary mode collapses truth and predictions with LabelMap::binary.
MetricsReport evaluate(Model& model, const TrainingData& data, std::span<const std::size_t> edges, EvalMode mode,
                       const TrainConfig& config, std::vector<std::string> class_names = {});
MetricsReport report_from_predictions(const Predictions& p, std::size_t num_classes, EvalMode mode,
                                      std::vector<std::string> class_names = {});

}  // namespace flowgnn
