#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "flowgnn/error.hpp"
#include "flowgnn/models.hpp"

using namespace flowgnn;

namespace {

constexpr Variant kAll[] = {Variant::kEGraphSage, Variant::kEGraphSageModified, Variant::kGat, Variant::kEResGat};

}  // namespace

TEST(Variant, ParseAndName) {
  for (Variant v : kAll) EXPECT_EQ(parse_variant(variant_name(v)), v);
  try {
    parse_variant("graphsage");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (Variant v : kAll) EXPECT_NE(msg.find(variant_name(v)), std::string::npos);
  }
}

TEST(ModelConfig, FromKeyValuesAndValidation) {
  KeyValues kv;
  kv.set("variant", "egraphsage");
  kv.set("layers", "3");
  auto c = ModelConfig::from_kv(kv);
  EXPECT_EQ(c.layers(), 3);
  EXPECT_EQ(c.hops, 3);
  c.hops = 2;
  EXPECT_THROW(c.validate(), ConfigError);

  KeyValues g;
  g.set("variant", "eresgat");
  g.set("heads", "4");
  g.set("hops", "1");
  auto gc = ModelConfig::from_kv(g);
  EXPECT_EQ(gc.heads, 4);
  EXPECT_EQ(gc.hops, 1);
  EXPECT_NO_THROW(gc.validate());
  gc.dropout = 1.0;
  EXPECT_THROW(gc.validate(), ConfigError);

  KeyValues bad;
  bad.set("aggregator", "lstm");
  EXPECT_THROW(ModelConfig::from_kv(bad), ConfigError);
}

TEST(Models, MatchNaiveEvaluators) {
  std::mt19937_64 rng(21);
  for (Variant v : kAll) {
    for (int trial = 0; trial < 8; ++trial) {
      auto inst = fixture::small_instance(rng, 12, 4);
      const int layers = 1 + static_cast<int>(trial % 3);
      Model model(fixture::small_config(v, inst.graph.num_edges(), layers, rng()), 4, 3);
      ad::Tape tape;
      auto out = model.forward(tape, {&inst.graph, &inst.features}, inst.batch, rng());
      EXPECT_LT(fixture::max_abs_diff(out.logits.value(), fixture::naive_logits(model, inst)), 1e-9)
          << variant_name(v) << " trial " << trial;
    }
  }
}

TEST(Models, EmbeddingWidths) {
  ModelConfig c;
  c.variant = Variant::kEGraphSageModified;
  c.hidden = 128;
  EXPECT_EQ(Model(c, 39, 10).embedding_width(), 295u);
  c.variant = Variant::kEGraphSage;
  EXPECT_EQ(Model(c, 39, 10).embedding_width(), 256u);
  c.variant = Variant::kEResGat;
  c.hops = 2;
  EXPECT_EQ(Model(c, 39, 10).embedding_width(), 6u * 16 + 39);
  c.variant = Variant::kGat;
  EXPECT_EQ(Model(c, 39, 10).embedding_width(), 16u);
}

TEST(Models, ModifiedSageExtendsOriginalEmbedding) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = fixture::small_instance(rng, 12, 3);
    const std::uint64_t seed = rng();
    Model orig(fixture::small_config(Variant::kEGraphSage, 12, 2, seed), 3, 2);
    Model mod(fixture::small_config(Variant::kEGraphSageModified, 12, 2, seed), 3, 2);
    ad::Tape t1, t2;
    const std::uint64_t sampling = rng();
    auto a = orig.forward(t1, {&inst.graph, &inst.features}, inst.batch, sampling).embedding.value();
    auto b = mod.forward(t2, {&inst.graph, &inst.features}, inst.batch, sampling).embedding.value();
    ASSERT_EQ(b.cols(), a.cols() + 3);
    EXPECT_EQ(b.leftCols(a.cols()), a);
    for (std::size_t i = 0; i < inst.batch.size(); ++i) {
      EXPECT_EQ(b.row(static_cast<Eigen::Index>(i)).rightCols(3),
                inst.features.row(static_cast<Eigen::Index>(inst.graph.edge(inst.batch[i]).record)));
    }
  }
}

TEST(Models, ResGatStatesEndInRawFeatures) {
  std::mt19937_64 rng(23);
  auto inst = fixture::small_instance(rng, 12, 4);
  Model model(fixture::small_config(Variant::kEResGat, 12, 3, 5), 4, 2);
  ad::Tape tape;
  model.forward(tape, {&inst.graph, &inst.features}, inst.batch, 1);
  LineNeighborhood nb = full_line_neighborhood(inst.graph, inst.batch, 12);
  const auto& states = model.gat()->last_states();
  ASSERT_EQ(states.size(), 3u);
  for (const auto& s : states) {
    for (std::size_t r = 0; r < nb.size(); ++r) {
      EXPECT_EQ(s.value().row(static_cast<Eigen::Index>(r)).rightCols(4),
                inst.features.row(static_cast<Eigen::Index>(inst.graph.edge(nb.nodes[r]).record)));
    }
  }
}

TEST(Models, AttentionObserverSeesNormalizedCoefficients) {
  std::mt19937_64 rng(24);
  auto inst = fixture::small_instance(rng, 12, 4);
  Model model(fixture::small_config(Variant::kGat, 12, 2, 3), 4, 2);
  int calls = 0;
  ForwardOptions opt;
  opt.observer = [&](const AttentionRecord& rec) {
    ++calls;
    for (std::size_t g = 0; g < rec.groups->size(); ++g) {
      double total = 0;
      for (std::size_t i : rec.groups->group(g)) total += (*rec.coefficients)(static_cast<Eigen::Index>(i), 0);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  };
  ad::Tape tape;
  model.forward(tape, {&inst.graph, &inst.features}, inst.batch, 0, opt);
  EXPECT_EQ(calls, 2 * 2);
}

TEST(Models, GradientsReachEveryParameter) {
  std::mt19937_64 rng(25);
  for (Variant v : kAll) {
    auto inst = fixture::small_instance(rng, 12, 3);
    Model model(fixture::small_config(v, 12, 2, 9), 3, 2);
    std::vector<int> y;
    for (std::size_t i = 0; i < inst.batch.size(); ++i) y.push_back(static_cast<int>(i % 2));
    ad::Tape tape;
    auto out = model.forward(tape, {&inst.graph, &inst.features}, inst.batch, 0);
    tape.backward(ad::cross_entropy(out.logits, y));
    for (auto* p : model.parameters()) EXPECT_TRUE(p->has_grad) << variant_name(v) << " " << p->name;
  }
}

TEST(Models, FeatureWidthMismatchIsShapeError) {
  std::mt19937_64 rng(26);
  auto inst = fixture::small_instance(rng, 12, 3);
  Model model(fixture::small_config(Variant::kEResGat, 12, 1, 1), 5, 2);
  ad::Tape tape;
  EXPECT_THROW(model.forward(tape, {&inst.graph, &inst.features}, inst.batch, 0), ShapeError);
}

TEST(SageLayer, RejectsEmptyNeighborhood) {
  ad::Tape t;
  ad::Groups g;
  g.add(std::vector<std::size_t>{});
  auto x = t.constant(ad::Matrix::Ones(1, 2));
  auto w = t.constant(ad::Matrix::Ones(4, 2));
  EXPECT_THROW(sage_layer(x, x, g, w), std::invalid_argument);
}
