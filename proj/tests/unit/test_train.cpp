#include <gtest/gtest.h>

#include <numeric>

#include "fixtures.hpp"
#include "flowgnn/error.hpp"
#include "flowgnn/train.hpp"

using namespace flowgnn;

namespace {

SyntheticSpec small_spec(std::size_t flows = 400) {
  SyntheticSpec s;
  s.flows = flows;
  s.informative = 6;
  return s;
}

ModelConfig sage_config() {
  ModelConfig c;
  c.variant = Variant::kEGraphSageModified;
  c.hidden = 16;
  c.sample_size = 4;
  c.seed = 3;
  return c;
}

ModelConfig resgat_config() {
  ModelConfig c;
  c.variant = Variant::kEResGat;
  c.set_layers(2);
  c.heads = 2;
  c.head_dim = 4;
  c.hops = 1;
  c.seed = 3;
  return c;
}

std::vector<ad::Matrix> snapshot(Model& m) {
  std::vector<ad::Matrix> out;
  for (auto* p : m.parameters()) out.push_back(p->value);
  return out;
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  ad::Parameter p("w", 1, 3);
  p.value << 1.0, -2.0, 0.5;
  p.grad << 0.3, -7.0, 1e-3;
  p.has_grad = true;
  ad::Parameter* ps[] = {&p};
  AdamConfig c;
  c.lr = 0.01;
  const ad::Matrix before = p.value;
  adam_step(ps, c);
  // m_hat = g, v_hat = g^2 after one step.
  const double g[] = {0.3, -7.0, 1e-3};
  for (int i = 0; i < 3; ++i) {
    const double expect = c.lr * std::abs(g[i]) / (std::sqrt(g[i] * g[i]) + c.eps);
    EXPECT_NEAR(std::abs(p.value(0, i) - before(0, i)), expect, 1e-12);
    EXPECT_NEAR(std::abs(p.value(0, i) - before(0, i)), c.lr, 1e-5);
  }
  EXPECT_EQ(p.step, 1);
  EXPECT_FALSE(p.has_grad);
  EXPECT_EQ(p.grad.cwiseAbs().sum(), 0.0);
}

TEST(Adam, ZeroGradientLeavesParameter) {
  ad::Parameter p("w", 2, 2);
  p.value.setConstant(0.25);
  ad::Parameter* ps[] = {&p};
  for (int i = 0; i < 5; ++i) {
    p.grad.setZero();
    p.has_grad = true;
    adam_step(ps, {});
  }
  EXPECT_EQ(p.value, ad::Matrix::Constant(2, 2, 0.25));
}

TEST(Adam, MissingGradientThrows) {
  ad::Parameter p("w", 1, 1);
  ad::Parameter* ps[] = {&p};
  EXPECT_THROW(adam_step(ps, {}), std::logic_error);
}

TEST(TrainConfig, PresetsAndOverrides) {
  EXPECT_DOUBLE_EQ(*TrainConfig::preset_lr("UNSW-NB15"), 0.007);
  EXPECT_DOUBLE_EQ(*TrainConfig::preset_lr("cic-darknet"), 0.003);
  EXPECT_DOUBLE_EQ(*TrainConfig::preset_lr("CSE-CIC-IDS"), 0.003);
  EXPECT_DOUBLE_EQ(*TrainConfig::preset_lr("ToN-IoT"), 0.01);
  EXPECT_FALSE(TrainConfig::preset_lr("kdd").has_value());

  KeyValues kv;
  kv.set("preset", "UNSW-NB15");
  EXPECT_DOUBLE_EQ(TrainConfig::from_kv(kv).adam.lr, 0.007);
  kv.set("lr", "0.05");
  EXPECT_DOUBLE_EQ(TrainConfig::from_kv(kv).adam.lr, 0.05);
  kv.set("task", "binary");
  EXPECT_EQ(TrainConfig::from_kv(kv).task, Task::kBinary);
  kv.set("task", "other");
  EXPECT_THROW(TrainConfig::from_kv(kv), ConfigError);

  TrainConfig d;
  EXPECT_EQ(d.batch_size, 500u);
  EXPECT_EQ(d.epochs, 2);
  d.batch_size = 0;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(TrainEpoch, BatchCountAndFiniteLosses) {
  auto ds = fixture::synthetic_dataset(small_spec(4000), 1);
  ASSERT_EQ(ds.train.size(), 2000u);
  Model model(sage_config(), static_cast<std::size_t>(ds.features.cols()), ds.classes);
  TrainConfig tc;
  auto trace = train_epoch(model, ds.data(), ds.train, tc, 0);
  EXPECT_EQ(trace.losses.size(), 4u);
  EXPECT_EQ(trace.seconds.size(), 4u);
  for (double l : trace.losses) EXPECT_TRUE(std::isfinite(l));
}

TEST(TrainEpoch, ZeroLearningRateKeepsParameters) {
  auto ds = fixture::synthetic_dataset(small_spec(), 2);
  Model model(resgat_config(), static_cast<std::size_t>(ds.features.cols()), ds.classes);
  const auto before = snapshot(model);
  TrainConfig tc;
  tc.batch_size = 50;
  tc.adam.lr = 0.0;
  train_epoch(model, ds.data(), ds.train, tc, 0);
  EXPECT_EQ(snapshot(model), before);
}

TEST(TrainEpoch, LossDecreasesOnLearnableTask) {
  auto ds = fixture::synthetic_dataset(small_spec(2000), 3);
  Model model(sage_config(), static_cast<std::size_t>(ds.features.cols()), ds.classes);
  TrainConfig tc;
  tc.batch_size = 25;
  auto trace = train_epoch(model, ds.data(), ds.train, tc, 0);
  const double first = std::accumulate(trace.losses.begin(), trace.losses.begin() + 5, 0.0);
  const double last = std::accumulate(trace.losses.end() - 5, trace.losses.end(), 0.0);
  EXPECT_LT(last, first);
}

TEST(TrainEpoch, DeterministicAcrossRuns) {
  auto ds = fixture::synthetic_dataset(small_spec(), 4);
  auto run = [&] {
    Model model(resgat_config(), static_cast<std::size_t>(ds.features.cols()), ds.classes);
    TrainConfig tc;
    tc.batch_size = 40;
    tc.seed = 8;
    for (int e = 0; e < 2; ++e) train_epoch(model, ds.data(), ds.train, tc, e);
    return snapshot(model);
  };
  EXPECT_EQ(run(), run());
}

TEST(TrainEpoch, EmptySplitThrows) {
  auto ds = fixture::synthetic_dataset(small_spec(), 5);
  Model model(sage_config(), static_cast<std::size_t>(ds.features.cols()), ds.classes);
  EXPECT_THROW(train_epoch(model, ds.data(), {}, TrainConfig{}, 0), EmptyDatasetError);
}

TEST(Evaluate, DoesNotMutateParametersAndListsEveryClass) {
  SyntheticSpec spec = small_spec();
  spec.classes = 4;
  spec.majority_fraction = 0.7;
  auto ds = fixture::synthetic_dataset(spec, 6);
  ModelConfig c = resgat_config();
  c.dropout = 0.3;
  Model model(c, static_cast<std::size_t>(ds.features.cols()), ds.classes);
  const auto before = snapshot(model);
  TrainConfig tc;
  auto multi = evaluate(model, ds.data(), ds.test, EvalMode::kMulti, tc);
  auto again = evaluate(model, ds.data(), ds.test, EvalMode::kMulti, tc);
  EXPECT_EQ(snapshot(model), before);
  EXPECT_EQ(multi.per_class.size(), 4u);
  EXPECT_EQ(multi.confusion.total(), ds.test.size());
  EXPECT_EQ(multi.weighted_f1, again.weighted_f1);
  auto binary = evaluate(model, ds.data(), ds.test, EvalMode::kBinary, tc);
  EXPECT_EQ(binary.class_names, (std::vector<std::string>{"normal", "attack"}));
}

TEST(Evaluate, PerfectAndConstantPredictors) {
  Predictions p;
  p.truth = std::vector<int>(100, 0);
  std::fill(p.truth.begin() + 90, p.truth.end(), 3);
  p.predicted = p.truth;
  auto perfect = report_from_predictions(p, 4, EvalMode::kBinary);
  EXPECT_EQ(perfect.weighted_f1, 1.0);
  EXPECT_EQ(perfect.macro_f1, 1.0);
  p.predicted.assign(100, 0);
  auto constant = report_from_predictions(p, 4, EvalMode::kBinary);
  EXPECT_NEAR(constant.weighted_f1, 0.9 * (2 * 0.9 / 1.9), 1e-12);
}
