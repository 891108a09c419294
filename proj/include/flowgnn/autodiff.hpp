#pragma once

// Dense reverse-mode differentiation over row-major double matrices.
//
// A Tape owns every value created during one forward pass. Operations
// append nodes in creation order, so walking the tape backwards visits
// nodes in reverse topological order. Parameters live outside the tape and
// receive accumulated gradients when the tape is differentiated.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "flowgnn/rng.hpp"

namespace flowgnn::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Trainable matrix with Adam moment state.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix first_moment;
  Matrix second_moment;
  std::int64_t step = 0;
  bool has_grad = false;

  Parameter() = default;
  Parameter(std::string name, Eigen::Index rows, Eigen::Index cols);

  void zero_grad();
};

// Glorot-uniform fill, bound sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Parameter& p, Rng& rng);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  // Gradient after Tape::backward; throws if the node received none.
  const Matrix& grad() const;
  bool has_grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Variable-size index groups in CSR form: group g is
// members[offsets[g] .. offsets[g+1]).
struct Groups {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> members;

  std::size_t size() const { return offsets.size() - 1; }
  std::span<const std::size_t> group(std::size_t g) const {
    return {members.data() + offsets[g], offsets[g + 1] - offsets[g]};
  }
  void add(std::span<const std::size_t> group_members);
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  // Leaf whose gradient is kept on the tape (for tests and probes).
  Tensor variable(Matrix value);
  // Leaf bound to a parameter; backward accumulates into p.grad.
  Tensor parameter(Parameter& p);

  // Seeds d(scalar)/d(scalar) = 1 and runs every reachable backward rule.
  void backward(const Tensor& scalar);

  std::size_t size() const { return nodes_.size(); }
  int visits(std::size_t id) const { return nodes_[id].visits; }
  // Smallest |x| fed into a piecewise-linear activation on this tape.
  double kink_distance() const { return kink_distance_; }

  // Op plumbing.
  Tensor record(Matrix value, std::initializer_list<Tensor> inputs, BackwardFn backward);
  Tensor record(Matrix value, std::span<const Tensor> inputs, BackwardFn backward);
  const Matrix& value_of(std::size_t id) const { return nodes_[id].value; }
  const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::size_t id) const { return nodes_[id].grad_ready; }
  // Zero-initialized on first access.
  Matrix& grad_of(std::size_t id);
  void note_kink(double distance) {
    if (distance < kink_distance_) kink_distance_ = distance;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool grad_ready = false;
    BackwardFn backward;
    Parameter* param = nullptr;
    int visits = 0;
  };

  std::deque<Node> nodes_;
  double kink_distance_ = std::numeric_limits<double>::infinity();
};

enum class ActivationKind { kRelu, kLeakyRelu, kElu };

struct Activation {
  ActivationKind kind = ActivationKind::kRelu;
  double param = 0.0;  // slope for leaky ReLU, alpha for ELU

  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation leaky_relu(double slope = 0.2) { return {ActivationKind::kLeakyRelu, slope}; }
  static Activation elu(double alpha = 1.0) { return {ActivationKind::kElu, alpha}; }
};

double apply_activation(double x, const Activation& act);

// x[n x d] * w[d x h]. Throws ShapeError naming both shapes.
Tensor matmul(const Tensor& x, const Tensor& w);
inline Tensor affine(const Tensor& x, const Tensor& w) { return matmul(x, w); }
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
// Elementwise mean of equally shaped tensors.
Tensor mean_of(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
// Row g of the result is the mean of x's rows in group g. Empty groups
// throw std::invalid_argument.
Tensor row_mean_groups(const Tensor& x, const Groups& groups);
// Subgradient at 0 is the left-hand slope.
Tensor activation(const Tensor& x, const Activation& act);
// logits is [n x 1]; softmax within each group, max-shifted. Entries not in
// any group are 0.
Tensor masked_softmax(const Tensor& logits, const Groups& groups);
// out[dst[i]] += weights[i] * values[src[i]]; out has `out_rows` rows.
Tensor weighted_scatter_sum(const Tensor& weights, const Tensor& values, std::span<const std::size_t> src,
                            std::span<const std::size_t> dst, std::size_t out_rows);
// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);
// Mean negative log-likelihood of `labels` under row-wise softmax.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);
Tensor sum(const Tensor& x);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t entries_checked = 0;
};

// Central differences (f(p+eps) - f(p-eps)) / 2eps against the analytic
// gradient for every entry of every parameter. Relative error is
// |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const std::function<Tensor(Tape&)>& loss, std::span<Parameter* const> params,
                           double eps = 1e-5);

}  // namespace flowgnn::ad
