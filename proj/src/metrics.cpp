#include "flowgnn/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace flowgnn {

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("confusion_matrix: " + std::to_string(truth.size()) + " labels vs " +
                                std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
      throw std::invalid_argument("confusion_matrix: label outside [0, " + std::to_string(classes) + ")");
    }
    ++m.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return m;
}

MetricsReport f1_scores(const ConfusionMatrix& confusion, std::vector<std::string> class_names) {
  const std::size_t c = confusion.classes();
  MetricsReport r;
  r.confusion = confusion;
  r.per_class.resize(c);
  const auto total = static_cast<double>(confusion.total());
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t tp = confusion.at(k, k), fp = 0, fn = 0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += confusion.at(j, k);
      fn += confusion.at(k, j);
    }
    ClassScore& s = r.per_class[k];
    s.support = tp + fn;
    s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    if (total > 0) r.weighted_f1 += static_cast<double>(s.support) / total * s.f1;
    r.macro_f1 += s.f1;
  }
  if (c > 0) r.macro_f1 /= static_cast<double>(c);
  if (class_names.size() != c) {
    class_names.clear();
    for (std::size_t k = 0; k < c; ++k) class_names.push_back(std::to_string(k));
  }
  r.class_names = std::move(class_names);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["weighted_f1"] = weighted_f1;
  j["macro_f1"] = macro_f1;
  j["total"] = confusion.total();
  auto& rows = j["per_class"] = nlohmann::json::array();
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    rows.push_back({{"class", k},
                    {"name", class_names[k]},
                    {"support", per_class[k].support},
                    {"precision", per_class[k].precision},
                    {"recall", per_class[k].recall},
                    {"f1", per_class[k].f1}});
  }
  auto& cm = j["confusion"] = nlohmann::json::array();
  for (std::size_t t = 0; t < confusion.classes(); ++t) {
    auto row = nlohmann::json::array();
    for (std::size_t p = 0; p < confusion.classes(); ++p) row.push_back(confusion.at(t, p));
    cm.push_back(std::move(row));
  }
  return j;
}

std::string MetricsReport::format_table() const {
  std::size_t width = 5;
  for (const auto& n : class_names) width = std::max(width, n.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-4s %-*s %9s %9s %9s %9s\n", "id", static_cast<int>(width), "class", "support",
                "precision", "recall", "f1");
  out += buf;
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    const auto& s = per_class[k];
    std::snprintf(buf, sizeof buf, "%-4zu %-*s %9zu %9.4f %9.4f %9.4f\n", k, static_cast<int>(width),
                  class_names[k].c_str(), s.support, s.precision, s.recall, s.f1);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "weighted f1 %.4f  macro f1 %.4f\n", weighted_f1, macro_f1);
  out += buf;
  return out;
}

}  // namespace flowgnn
