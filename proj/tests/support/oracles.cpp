#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

using flowgnn::BipartiteGraph;
using flowgnn::Edge;

Mat to_mat(const flowgnn::ad::Matrix& m) {
  Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

BipartiteGraph random_simple_bipartite(std::mt19937_64& rng, std::size_t max_side, std::size_t max_edges) {
  std::uniform_int_distribution<std::size_t> side(1, max_side);
  const std::size_t ns = side(rng), nd = side(rng);
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t d = 0; d < nd; ++d) all.emplace_back(s, d);
  }
  std::shuffle(all.begin(), all.end(), rng);
  std::uniform_int_distribution<std::size_t> count(1, std::min(max_edges, all.size()));
  all.resize(count(rng));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < all.size(); ++i) edges.push_back(Edge{all[i].first, ns + all[i].second, i, 0});
  return BipartiteGraph(ns, nd, std::move(edges));
}

BipartiteGraph random_bipartite(std::mt19937_64& rng, std::size_t sources, std::size_t destinations,
                                std::size_t edges) {
  std::uniform_int_distribution<std::size_t> s(0, sources - 1), d(0, destinations - 1);
  std::vector<Edge> out;
  for (std::size_t i = 0; i < edges; ++i) out.push_back(Edge{s(rng), sources + d(rng), i, 0});
  return BipartiteGraph(sources, destinations, std::move(out));
}

std::uint64_t brute_line_edges(const BipartiteGraph& g) {
  std::uint64_t n = 0;
  const auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      if (edges[i].src == edges[j].src || edges[i].dst == edges[j].dst) ++n;
    }
  }
  return n;
}

std::uint64_t degree_formula(const BipartiteGraph& g) {
  std::vector<std::uint64_t> degree(g.num_nodes(), 0);
  for (const auto& e : g.edges()) {
    ++degree[e.src];
    ++degree[e.dst];
  }
  std::uint64_t total = 0;
  for (auto d : degree) total += d * (d == 0 ? 0 : d - 1) / 2;
  return total;
}

std::vector<std::set<std::size_t>> brute_khop(const BipartiteGraph& g, const std::vector<std::size_t>& batch,
                                              int hops) {
  std::vector<std::set<std::size_t>> layers(static_cast<std::size_t>(hops) + 1);
  layers[hops] = std::set<std::size_t>(batch.begin(), batch.end());
  for (int k = hops; k >= 1; --k) {
    std::set<std::size_t> nodes;
    for (std::size_t e : layers[k]) {
      nodes.insert(g.edges()[e].src);
      nodes.insert(g.edges()[e].dst);
    }
    layers[k - 1] = layers[k];
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      if (nodes.count(g.edges()[e].src) || nodes.count(g.edges()[e].dst)) layers[k - 1].insert(e);
    }
  }
  return layers;
}

SampleScores per_sample_scores(const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t classes) {
  SampleScores s;
  s.precision.assign(classes, 0.0);
  s.recall.assign(classes, 0.0);
  s.f1.assign(classes, 0.0);
  s.support.assign(classes, 0);
  const std::size_t n = truth.size();
  for (std::size_t c = 0; c < classes; ++c) {
    const int k = static_cast<int>(c);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] == k && predicted[i] == k) ++tp;
      if (truth[i] != k && predicted[i] == k) ++fp;
      if (truth[i] == k && predicted[i] != k) ++fn;
    }
    s.support[c] = tp + fn;
    if (tp + fp > 0) s.precision[c] = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) s.recall[c] = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (s.precision[c] + s.recall[c] > 0) {
      s.f1[c] = 2.0 * s.precision[c] * s.recall[c] / (s.precision[c] + s.recall[c]);
    }
    if (n > 0) s.weighted_f1 += static_cast<double>(s.support[c]) / static_cast<double>(n) * s.f1[c];
    s.macro_f1 += s.f1[c];
  }
  if (classes > 0) s.macro_f1 /= static_cast<double>(classes);
  return s;
}

double central_difference_error(const std::function<double()>& loss, const std::vector<flowgnn::ad::Parameter*>& params,
                                const std::vector<flowgnn::ad::Matrix>& analytic, double eps) {
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& value = params[p]->value;
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + eps;
      const double up = loss();
      value.data()[i] = saved - eps;
      const double down = loss();
      value.data()[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[p].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

namespace {

Vec times(const Vec& v, const Mat& w) {
  Vec out(w.empty() ? 0 : w[0].size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[i] * w[i][j];
  }
  return out;
}

Vec join(std::initializer_list<const Vec*> parts) {
  Vec out;
  for (const Vec* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Mat naive_sage_logits(const BipartiteGraph& g, const Mat& x, const std::vector<std::size_t>& batch,
                      const std::vector<Mat>& weights, const Mat& classifier, bool modified) {
  const auto edges = g.edges();
  const std::size_t f = x[0].size();
  Mat h(g.num_nodes(), Vec(f, 1.0));
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Mat next(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      Vec mean;
      std::size_t count = 0;
      for (const auto& e : edges) {
        if (e.src != v && e.dst != v) continue;
        const std::size_t u = e.src == v ? e.dst : e.src;
        Vec msg = k == 0 ? x[e.record] : join({&h[u], &x[e.record]});
        if (mean.empty()) mean.assign(msg.size(), 0.0);
        for (std::size_t j = 0; j < msg.size(); ++j) mean[j] += msg[j];
        ++count;
      }
      if (count == 0) continue;
      for (double& m : mean) m /= static_cast<double>(count);
      Vec out = times(join({&h[v], &mean}), weights[k]);
      for (double& o : out) o = std::max(o, 0.0);
      next[v] = std::move(out);
    }
    h = std::move(next);
  }
  Mat logits;
  for (std::size_t e : batch) {
    const Edge& edge = edges[e];
    Vec z = modified ? join({&h[edge.src], &h[edge.dst], &x[edge.record]}) : join({&h[edge.src], &h[edge.dst]});
    logits.push_back(times(z, classifier));
  }
  return logits;
}

Mat naive_gat_logits(const BipartiteGraph& g, const Mat& x, const std::vector<std::size_t>& batch,
                     const std::vector<std::vector<NaiveHead>>& heads, const Mat& classifier, bool residual) {
  const auto edges = g.edges();
  const std::size_t n = edges.size();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u = 0; u < n; ++u) {
      const bool shares = edges[u].src == edges[v].src || edges[u].dst == edges[v].dst;
      if (u == v || shares) nbrs[v].push_back(u);
    }
  }
  Mat raw(n);
  for (std::size_t v = 0; v < n; ++v) raw[v] = x[edges[v].record];

  Mat h = raw;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const bool average = !residual && k + 1 == heads.size();
    Mat next(n);
    for (std::size_t m = 0; m < heads[k].size(); ++m) {
      const auto& head = heads[k][m];
      Mat wh(n);
      for (std::size_t v = 0; v < n; ++v) wh[v] = times(h[v], head.weight);
      for (std::size_t v = 0; v < n; ++v) {
        Vec score;
        for (std::size_t u : nbrs[v]) {
          const double e = dot(join({&wh[u], &wh[v]}), head.attention);
          score.push_back(e > 0 ? e : 0.2 * e);
        }
        double denom = 0.0;
        for (double s : score) denom += std::exp(s);
        Vec agg(wh[v].size(), 0.0);
        for (std::size_t i = 0; i < nbrs[v].size(); ++i) {
          const double alpha = std::exp(score[i]) / denom;
          for (std::size_t j = 0; j < agg.size(); ++j) agg[j] += alpha * wh[nbrs[v][i]][j];
        }
        for (double& a : agg) a = a > 0 ? a : std::expm1(a);
        if (average) {
          if (next[v].empty()) next[v].assign(agg.size(), 0.0);
          for (std::size_t j = 0; j < agg.size(); ++j) next[v][j] += agg[j] / static_cast<double>(heads[k].size());
        } else {
          next[v].insert(next[v].end(), agg.begin(), agg.end());
        }
      }
    }
    if (residual) {
      for (std::size_t v = 0; v < n; ++v) next[v].insert(next[v].end(), raw[v].begin(), raw[v].end());
    }
    h = std::move(next);
  }
  Mat logits;
  for (std::size_t e : batch) logits.push_back(times(h[e], classifier));
  return logits;
}

}  // namespace oracle
