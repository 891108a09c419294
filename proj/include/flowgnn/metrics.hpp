#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace flowgnn {

// C x C counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::size_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * classes_ + predicted]; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  std::size_t total() const;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

// Throws std::invalid_argument on length mismatch or a label >= classes.
ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted, std::size_t classes);

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  ConfusionMatrix confusion;
  std::vector<ClassScore> per_class;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::string> class_names;

  nlohmann::json to_json() const;
  // One row per class: name, support, precision, recall, F1.
  std::string format_table() const;
};

// Per class: P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R). Any undefined
// ratio is 0. Weighted F1 weights by support share; macro F1 averages all
// C classes evenly, absent classes included.
MetricsReport f1_scores(const ConfusionMatrix& confusion, std::vector<std::string> class_names = {});

}  // namespace flowgnn
