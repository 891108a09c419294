#include "flowgnn/train.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "flowgnn/error.hpp"
#include "flowgnn/ingest.hpp"
#include "flowgnn/rng.hpp"

namespace flowgnn {

namespace {

std::string squash(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::uint64_t batch_seed(std::uint64_t base, int epoch, std::size_t batch) {
  return splitmix64(base ^ splitmix64((static_cast<std::uint64_t>(epoch) << 32) + batch));
}

std::vector<int> batch_labels(const TrainingData& data, std::span<const std::size_t> batch) {
  std::vector<int> y;
  y.reserve(batch.size());
  for (std::size_t e : batch) y.push_back(data.labels[data.graph->edge(e).record]);
  return y;
}

}  // namespace

void adam_step(std::span<ad::Parameter* const> params, const AdamConfig& c) {
  for (ad::Parameter* p : params) {
    if (!p->has_grad) throw std::logic_error("adam_step: parameter '" + p->name + "' has no gradient");
  }
  for (ad::Parameter* p : params) {
    if (p->first_moment.size() != p->value.size()) {
      p->first_moment = ad::Matrix::Zero(p->value.rows(), p->value.cols());
      p->second_moment = ad::Matrix::Zero(p->value.rows(), p->value.cols());
    }
    ++p->step;
    p->first_moment = c.beta1 * p->first_moment + (1.0 - c.beta1) * p->grad;
    p->second_moment = c.beta2 * p->second_moment + (1.0 - c.beta2) * p->grad.cwiseProduct(p->grad);
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(p->step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(p->step));
    p->value.array() -= c.lr * (p->first_moment.array() / bc1) / ((p->second_moment.array() / bc2).sqrt() + c.eps);
    p->zero_grad();
  }
}

std::optional<double> TrainConfig::preset_lr(const std::string& dataset) {
  const std::string key = squash(dataset);
  if (key == "unswnb15") return 0.007;
  if (key == "cicdarknet") return 0.003;
  if (key == "csecicids" || key == "csecicids2018") return 0.003;
  if (key == "toniot") return 0.01;
  return std::nullopt;
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  kv.require_known({"batch_size", "epochs", "lr", "preset", "beta1", "beta2", "eps", "seed", "task", "inductive"});
  TrainConfig c;
  c.batch_size = static_cast<std::size_t>(kv.get_int("batch_size", static_cast<std::int64_t>(c.batch_size)));
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.preset = kv.get_or("preset", "");
  if (!c.preset.empty()) {
    auto lr = preset_lr(c.preset);
    if (!lr) throw ConfigError("unknown preset '" + c.preset + "' (valid: UNSW-NB15, CIC-DarkNet, CSE-CIC-IDS, ToN-IoT)");
    c.adam.lr = *lr;
  }
  c.adam.lr = kv.get_double("lr", c.adam.lr);
  c.adam.beta1 = kv.get_double("beta1", c.adam.beta1);
  c.adam.beta2 = kv.get_double("beta2", c.adam.beta2);
  c.adam.eps = kv.get_double("eps", c.adam.eps);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  const std::string task = kv.get_or("task", "multi");
  if (task == "multi") {
    c.task = Task::kMulti;
  } else if (task == "binary") {
    c.task = Task::kBinary;
  } else {
    throw ConfigError("unknown task '" + task + "' (valid: multi, binary)");
  }
  c.inductive = kv.get_bool("inductive", false);
  return c;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(adam.lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("eps must be > 0");
}

EpochTrace train_epoch(Model& model, const TrainingData& data, std::span<const std::size_t> train_edges,
                       const TrainConfig& config, int epoch, const ForwardOptions& options, const BatchHook& hook) {
  if (train_edges.empty()) throw EmptyDatasetError("train_epoch: empty training split");
  config.validate();

  std::vector<std::size_t> order(train_edges.begin(), train_edges.end());
  Rng shuffle_rng = make_rng(batch_seed(derive_seed(config.seed, SeedRole::kShuffle), epoch, 0));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  Rng dropout_rng = make_rng(batch_seed(derive_seed(config.seed, SeedRole::kDropout), epoch, 0));
  ForwardOptions opts = options;
  opts.training = true;
  if (opts.dropout_rng == nullptr) opts.dropout_rng = &dropout_rng;

  auto params = model.parameters();
  for (auto* p : params) p->zero_grad();
  const std::uint64_t sampling = derive_seed(config.seed, SeedRole::kSampling);

  EpochTrace trace;
  trace.epoch = epoch;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
    const auto t0 = std::chrono::steady_clock::now();
    std::span<const std::size_t> batch(order.data() + start, std::min(config.batch_size, order.size() - start));
    ad::Tape tape;
    ForwardOutput out = model.forward(tape, data.inputs(), batch, batch_seed(sampling, epoch, batch_index), opts);
    if (hook) hook(batch_index, out);
    const auto y = batch_labels(data, batch);
    ad::Tensor loss = ad::cross_entropy(out.logits, y);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) {
      throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index));
    }
    tape.backward(loss);
    adam_step(params, config.adam);
    trace.losses.push_back(value);
    trace.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return trace;
}

Predictions predict(Model& model, const TrainingData& data, std::span<const std::size_t> edges,
                    const TrainConfig& config, bool keep_embeddings) {
  Predictions p;
  p.edges.assign(edges.begin(), edges.end());
  const std::uint64_t sampling = derive_seed(config.seed, SeedRole::kEvalSampling);
  if (keep_embeddings) {
    p.embeddings.resize(static_cast<Eigen::Index>(edges.size()), static_cast<Eigen::Index>(model.embedding_width()));
  }
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < edges.size(); start += config.batch_size, ++batch_index) {
    std::span<const std::size_t> batch(edges.data() + start, std::min(config.batch_size, edges.size() - start));
    ad::Tape tape;
    ForwardOutput out = model.forward(tape, data.inputs(), batch, batch_seed(sampling, 0, batch_index));
    const ad::Matrix& logits = out.logits.value();
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index best = 0;
      logits.row(i).maxCoeff(&best);
      p.predicted.push_back(static_cast<int>(best));
    }
    for (int y : batch_labels(data, batch)) p.truth.push_back(y);
    if (keep_embeddings) {
      p.embeddings.middleRows(static_cast<Eigen::Index>(start), out.embedding.rows()) = out.embedding.value();
    }
  }
  return p;
}

MetricsReport report_from_predictions(const Predictions& p, std::size_t num_classes, EvalMode mode,
                                      std::vector<std::string> class_names) {
  if (mode == EvalMode::kMulti) return f1_scores(confusion_matrix(p.truth, p.predicted, num_classes), class_names);
  std::vector<int> truth, predicted;
  for (int y : p.truth) truth.push_back(LabelMap::binary(y));
  for (int y : p.predicted) predicted.push_back(LabelMap::binary(y));
  return f1_scores(confusion_matrix(truth, predicted, 2), {"normal", "attack"});
}

MetricsReport evaluate(Model& model, const TrainingData& data, std::span<const std::size_t> edges, EvalMode mode,
                       const TrainConfig& config, std::vector<std::string> class_names) {
  return report_from_predictions(predict(model, data, edges, config), data.num_classes, mode, std::move(class_names));
}

}  // namespace flowgnn
