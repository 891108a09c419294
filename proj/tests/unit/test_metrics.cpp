#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "flowgnn/metrics.hpp"
#include "oracles.hpp"

using namespace flowgnn;

TEST(ConfusionMatrix, Examples) {
  std::vector<int> t{0, 1, 2}, p{0, 1, 2};
  auto m = confusion_matrix(t, p, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m.at(i, j), i == j ? 1u : 0u);
  }
  std::vector<int> t2{0, 0, 1}, p2{0, 0, 0};
  auto m2 = confusion_matrix(t2, p2, 2);
  EXPECT_EQ(m2.at(0, 0), 2u);
  EXPECT_EQ(m2.at(0, 1), 0u);
  EXPECT_EQ(m2.at(1, 0), 1u);
  EXPECT_EQ(m2.at(1, 1), 0u);

  std::mt19937_64 rng(1);
  std::vector<int> a(1000), b(1000);
  for (auto& v : a) v = static_cast<int>(rng() % 4);
  for (auto& v : b) v = static_cast<int>(rng() % 4);
  EXPECT_EQ(confusion_matrix(a, b, 4).total(), 1000u);
}

TEST(ConfusionMatrix, Errors) {
  std::vector<int> a{0, 1}, b{0};
  EXPECT_THROW(confusion_matrix(a, b, 2), std::invalid_argument);
  std::vector<int> c{0, 2};
  EXPECT_THROW(confusion_matrix(a, c, 2), std::invalid_argument);
}

TEST(F1Scores, HandComputedClass) {
  // Class 1: TP 8, FP 2, FN 4.
  ConfusionMatrix m(2);
  m.at(1, 1) = 8;
  m.at(0, 1) = 2;
  m.at(1, 0) = 4;
  m.at(0, 0) = 6;
  auto r = f1_scores(m);
  EXPECT_DOUBLE_EQ(r.per_class[1].precision, 0.8);
  EXPECT_NEAR(r.per_class[1].recall, 0.6667, 1e-4);
  EXPECT_NEAR(r.per_class[1].f1, 0.7273, 1e-4);
  EXPECT_EQ(r.per_class[1].support, 12u);
}

TEST(F1Scores, EqualPrecisionRecallGivesThatValue) {
  ConfusionMatrix m(2);
  m.at(0, 0) = 3;
  m.at(0, 1) = 1;
  m.at(1, 0) = 1;
  m.at(1, 1) = 3;
  auto r = f1_scores(m);
  EXPECT_DOUBLE_EQ(r.per_class[0].f1, 0.75);
}

TEST(F1Scores, AbsentClassScoresZeroAndCountsInMacro) {
  ConfusionMatrix m(3);
  m.at(0, 0) = 5;
  m.at(1, 1) = 5;
  auto r = f1_scores(m);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  EXPECT_EQ(r.per_class[2].precision, 0.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.weighted_f1, 1.0);
}

TEST(F1Scores, ZeroTruePositivesGiveZero) {
  ConfusionMatrix m(2);
  m.at(0, 1) = 3;
  m.at(1, 0) = 2;
  auto r = f1_scores(m);
  EXPECT_EQ(r.per_class[0].f1, 0.0);
  EXPECT_EQ(r.per_class[1].f1, 0.0);
  EXPECT_EQ(r.weighted_f1, 0.0);
}

TEST(F1Scores, AlwaysNormalOnImbalancedSplit) {
  std::vector<int> truth(100, 0), pred(100, 0);
  std::fill(truth.begin() + 90, truth.end(), 1);
  auto r = f1_scores(confusion_matrix(truth, pred, 2));
  const double f0 = 2 * 0.9 / 1.9;
  EXPECT_NEAR(r.weighted_f1, 0.9 * f0, 1e-12);
  EXPECT_NEAR(r.weighted_f1, 0.8526, 1e-4);
}

TEST(F1Scores, MatchesPerSampleOracleExactly) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + rng() % 6;
    std::vector<int> t, p;
    const std::size_t n = rng() % 300;
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back(static_cast<int>(rng() % c));
      p.push_back(static_cast<int>(rng() % c));
    }
    auto r = f1_scores(confusion_matrix(t, p, c));
    auto o = oracle::per_sample_scores(t, p, c);
    for (std::size_t k = 0; k < c; ++k) {
      EXPECT_EQ(r.per_class[k].precision, o.precision[k]);
      EXPECT_EQ(r.per_class[k].recall, o.recall[k]);
      EXPECT_EQ(r.per_class[k].f1, o.f1[k]);
      EXPECT_EQ(r.per_class[k].support, o.support[k]);
    }
    EXPECT_EQ(r.weighted_f1, o.weighted_f1);
    EXPECT_EQ(r.macro_f1, o.macro_f1);
    EXPECT_GE(r.macro_f1, 0.0);
    EXPECT_LE(r.macro_f1, 1.0);
    EXPECT_GE(r.weighted_f1, 0.0);
    EXPECT_LE(r.weighted_f1, 1.0 + 1e-12);
  }
}

TEST(F1Scores, ClassPermutationPermutesScores) {
  std::mt19937_64 rng(8);
  const std::size_t c = 5;
  std::vector<int> t, p;
  for (int i = 0; i < 400; ++i) {
    t.push_back(static_cast<int>(rng() % c));
    p.push_back(rng() % 3 == 0 ? static_cast<int>(rng() % c) : t.back());
  }
  std::vector<int> perm(c);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> tp, pp;
  for (int v : t) tp.push_back(perm[v]);
  for (int v : p) pp.push_back(perm[v]);
  auto a = f1_scores(confusion_matrix(t, p, c));
  auto b = f1_scores(confusion_matrix(tp, pp, c));
  for (std::size_t k = 0; k < c; ++k) EXPECT_DOUBLE_EQ(a.per_class[k].f1, b.per_class[perm[k]].f1);
  EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-15);
}

TEST(MetricsReport, JsonAndTable) {
  std::vector<int> t{0, 1, 1, 2}, p{0, 1, 2, 2};
  auto r = f1_scores(confusion_matrix(t, p, 3), {"Normal", "DoS", "Scan"});
  auto j = r.to_json();
  EXPECT_EQ(j["per_class"].size(), 3u);
  EXPECT_EQ(j["per_class"][1]["name"], "DoS");
  EXPECT_EQ(j["confusion"][1][2], 1);
  EXPECT_EQ(j["total"], 4);
  const std::string table = r.format_table();
  EXPECT_NE(table.find("Scan"), std::string::npos);
  EXPECT_NE(table.find("macro f1"), std::string::npos);
  auto unnamed = f1_scores(confusion_matrix(t, p, 3));
  EXPECT_EQ(unnamed.class_names, (std::vector<std::string>{"0", "1", "2"}));
}
