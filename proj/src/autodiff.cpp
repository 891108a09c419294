#include "flowgnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "flowgnn/error.hpp"

namespace flowgnn::ad {

namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << "[" << m.rows() << " x " << m.cols() << "]";
  return os.str();
}

Tape& tape_of(const Tensor& t) {
  if (!t.valid()) throw std::invalid_argument("tensor is not attached to a tape");
  return *t.tape();
}

}  // namespace

Parameter::Parameter(std::string name_, Eigen::Index rows, Eigen::Index cols)
    : name(std::move(name_)),
      value(Matrix::Zero(rows, cols)),
      grad(Matrix::Zero(rows, cols)),
      first_moment(Matrix::Zero(rows, cols)),
      second_moment(Matrix::Zero(rows, cols)) {}

void Parameter::zero_grad() {
  grad.setZero(value.rows(), value.cols());
  has_grad = false;
}

void glorot_uniform(Parameter& p, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
}

const Matrix& Tensor::value() const { return tape_of(*this).value_of(id_); }

const Matrix& Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient");
  return tape_->upstream(id_);
}

bool Tensor::has_grad() const { return tape_ != nullptr && tape_->has_grad(id_); }
bool Tensor::requires_grad() const { return tape_ != nullptr && tape_->requires_grad(id_); }

void Groups::add(std::span<const std::size_t> group_members) {
  members.insert(members.end(), group_members.begin(), group_members.end());
  offsets.push_back(members.size());
}

Tensor Tape::constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::variable(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = true;
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::parameter(Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(Matrix value, std::initializer_list<Tensor> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Tensor>(inputs.begin(), inputs.size()), std::move(backward));
}

Tensor Tape::record(Matrix value, std::span<const Tensor> inputs, BackwardFn backward) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (in.tape() != this) throw std::invalid_argument("op inputs belong to a different tape");
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return Tensor(this, nodes_.size() - 1);
}

Matrix& Tape::grad_of(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad_ready) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.grad_ready = true;
  }
  return n.grad;
}

void Tape::backward(const Tensor& scalar) {
  if (scalar.tape() != this) throw std::invalid_argument("backward: tensor belongs to a different tape");
  const Matrix& v = nodes_[scalar.id()].value;
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("backward: expected a [1 x 1] loss, got " + shape(v));
  grad_of(scalar.id()).setOnes();
  for (std::size_t id = scalar.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.grad_ready || !n.requires_grad) continue;
    ++n.visits;
    if (n.param != nullptr) {
      if (!n.param->has_grad) {
        n.param->grad = n.grad;
        n.param->has_grad = true;
      } else {
        n.param->grad += n.grad;
      }
    }
    if (n.backward) n.backward(*this, id);
  }
}

double apply_activation(double x, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::kRelu:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::kLeakyRelu:
      return x > 0.0 ? x : act.param * x;
    case ActivationKind::kElu:
      return x > 0.0 ? x : act.param * (std::exp(x) - 1.0);
  }
  return x;
}

namespace {

double activation_slope(double x, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::kRelu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::kLeakyRelu:
      return x > 0.0 ? 1.0 : act.param;
    case ActivationKind::kElu:
      return x > 0.0 ? 1.0 : act.param * std::exp(x);
  }
  return 1.0;
}

}  // namespace

Tensor matmul(const Tensor& x, const Tensor& w) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  if (xv.cols() != wv.rows()) throw ShapeError("matmul: " + shape(xv) + " times " + shape(wv));
  const std::size_t xi = x.id(), wi = w.id();
  return t.record(xv * wv, {x, w}, [xi, wi](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.requires_grad(xi)) tp.grad_of(xi).noalias() += g * tp.value_of(wi).transpose();
    if (tp.requires_grad(wi)) tp.grad_of(wi).noalias() += tp.value_of(xi).transpose() * g;
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& t = tape_of(a);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("add: " + shape(a.value()) + " vs " + shape(b.value()));
  }
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(a.value() + b.value(), {a, b}, [ai, bi](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.requires_grad(ai)) tp.grad_of(ai) += g;
    if (tp.requires_grad(bi)) tp.grad_of(bi) += g;
  });
}

Tensor scale(const Tensor& x, double factor) {
  Tape& t = tape_of(x);
  const std::size_t xi = x.id();
  return t.record(x.value() * factor, {x}, [xi, factor](Tape& tp, std::size_t self) {
    tp.grad_of(xi) += tp.upstream(self) * factor;
  });
}

Tensor mean_of(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("mean_of: no inputs");
  Tape& t = tape_of(parts[0]);
  Matrix acc = parts[0].value();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].rows() != acc.rows() || parts[i].cols() != acc.cols()) {
      throw ShapeError("mean_of: " + shape(acc) + " vs " + shape(parts[i].value()));
    }
    acc += parts[i].value();
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  acc *= inv;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return t.record(std::move(acc), parts, [ids, inv](Tape& tp, std::size_t self) {
    for (std::size_t id : ids) {
      if (tp.requires_grad(id)) tp.grad_of(id) += tp.upstream(self) * inv;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + shape(parts[0].value()) + " vs " + shape(p.value()));
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> starts;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    ids.push_back(p.id());
    starts.push_back(at);
    at += p.cols();
  }
  return t.record(std::move(out), parts, [ids, starts](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!tp.requires_grad(ids[i])) continue;
      Matrix& gi = tp.grad_of(ids[i]);
      gi += g.middleCols(starts[i], gi.cols());
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(xv.rows())) throw std::out_of_range("gather_rows: row out of range");
    out.row(static_cast<Eigen::Index>(i)) = xv.row(static_cast<Eigen::Index>(rows[i]));
  }
  const std::size_t xi = x.id();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {x}, [xi, idx = std::move(idx)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    Matrix& gx = tp.grad_of(xi);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      gx.row(static_cast<Eigen::Index>(idx[i])) += g.row(static_cast<Eigen::Index>(i));
    }
  });
}

Tensor row_mean_groups(const Tensor& x, const Groups& groups) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(groups.size()), xv.cols());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto members = groups.group(g);
    if (members.empty()) throw std::invalid_argument("row_mean_groups: group " + std::to_string(g) + " is empty");
    for (std::size_t m : members) {
      if (m >= static_cast<std::size_t>(xv.rows())) throw std::out_of_range("row_mean_groups: member out of range");
      out.row(static_cast<Eigen::Index>(g)) += xv.row(static_cast<Eigen::Index>(m));
    }
    out.row(static_cast<Eigen::Index>(g)) /= static_cast<double>(members.size());
  }
  const std::size_t xi = x.id();
  return t.record(std::move(out), {x}, [xi, groups](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    Matrix& gx = tp.grad_of(xi);
    for (std::size_t k = 0; k < groups.size(); ++k) {
      auto members = groups.group(k);
      const double inv = 1.0 / static_cast<double>(members.size());
      for (std::size_t m : members) gx.row(static_cast<Eigen::Index>(m)) += g.row(static_cast<Eigen::Index>(k)) * inv;
    }
  });
}

Tensor activation(const Tensor& x, const Activation& act) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  if (act.kind != ActivationKind::kElu && xv.size() > 0) t.note_kink(xv.cwiseAbs().minCoeff());
  Matrix out = xv.unaryExpr([act](double v) { return apply_activation(v, act); });
  const std::size_t xi = x.id();
  return t.record(std::move(out), {x}, [xi, act](Tape& tp, std::size_t self) {
    const Matrix& in = tp.value_of(xi);
    tp.grad_of(xi) += tp.upstream(self).cwiseProduct(in.unaryExpr([act](double v) { return activation_slope(v, act); }));
  });
}

Tensor masked_softmax(const Tensor& logits, const Groups& groups) {
  Tape& t = tape_of(logits);
  const Matrix& lv = logits.value();
  if (lv.cols() != 1) throw ShapeError("masked_softmax: logits must be a column, got " + shape(lv));
  Matrix out = Matrix::Zero(lv.rows(), 1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto members = groups.group(g);
    if (members.empty()) continue;
    double mx = -INFINITY;
    for (std::size_t m : members) mx = std::max(mx, lv(static_cast<Eigen::Index>(m), 0));
    double total = 0.0;
    for (std::size_t m : members) {
      const double e = std::exp(lv(static_cast<Eigen::Index>(m), 0) - mx);
      out(static_cast<Eigen::Index>(m), 0) = e;
      total += e;
    }
    for (std::size_t m : members) out(static_cast<Eigen::Index>(m), 0) /= total;
  }
  const std::size_t li = logits.id();
  Matrix alpha = out;
  return t.record(std::move(out), {logits}, [li, alpha = std::move(alpha), groups](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    Matrix& gl = tp.grad_of(li);
    for (std::size_t k = 0; k < groups.size(); ++k) {
      auto members = groups.group(k);
      double dot = 0.0;
      for (std::size_t m : members) dot += alpha(static_cast<Eigen::Index>(m), 0) * g(static_cast<Eigen::Index>(m), 0);
      for (std::size_t m : members) {
        const auto r = static_cast<Eigen::Index>(m);
        gl(r, 0) += alpha(r, 0) * (g(r, 0) - dot);
      }
    }
  });
}

Tensor weighted_scatter_sum(const Tensor& weights, const Tensor& values, std::span<const std::size_t> src,
                            std::span<const std::size_t> dst, std::size_t out_rows) {
  Tape& t = tape_of(weights);
  const Matrix& w = weights.value();
  const Matrix& v = values.value();
  if (w.cols() != 1 || static_cast<std::size_t>(w.rows()) != src.size() || src.size() != dst.size()) {
    throw ShapeError("weighted_scatter_sum: weights " + shape(w) + " for " + std::to_string(src.size()) + " pairs");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(out_rows), v.cols());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] >= static_cast<std::size_t>(v.rows()) || dst[i] >= out_rows) {
      throw std::out_of_range("weighted_scatter_sum: pair index out of range");
    }
    out.row(static_cast<Eigen::Index>(dst[i])) += w(static_cast<Eigen::Index>(i), 0) * v.row(static_cast<Eigen::Index>(src[i]));
  }
  const std::size_t wi = weights.id(), vi = values.id();
  std::vector<std::size_t> s(src.begin(), src.end()), d(dst.begin(), dst.end());
  return t.record(std::move(out), {weights, values},
                  [wi, vi, s = std::move(s), d = std::move(d)](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.upstream(self);
                    const Matrix& wv = tp.value_of(wi);
                    const Matrix& vv = tp.value_of(vi);
                    const bool need_w = tp.requires_grad(wi), need_v = tp.requires_grad(vi);
                    Matrix* gw = need_w ? &tp.grad_of(wi) : nullptr;
                    Matrix* gv = need_v ? &tp.grad_of(vi) : nullptr;
                    for (std::size_t i = 0; i < s.size(); ++i) {
                      const auto si = static_cast<Eigen::Index>(s[i]);
                      const auto di = static_cast<Eigen::Index>(d[i]);
                      const auto ii = static_cast<Eigen::Index>(i);
                      if (gw) (*gw)(ii, 0) += g.row(di).dot(vv.row(si));
                      if (gv) gv->row(si) += wv(ii, 0) * g.row(di);
                    }
                  });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  Tape& t = tape_of(x);
  std::bernoulli_distribution keep(1.0 - rate);
  const double inv = 1.0 / (1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? inv : 0.0;
  Matrix out = x.value().cwiseProduct(mask);
  const std::size_t xi = x.id();
  return t.record(std::move(out), {x}, [xi, mask = std::move(mask)](Tape& tp, std::size_t self) {
    tp.grad_of(xi) += tp.upstream(self).cwiseProduct(mask);
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  Tape& t = tape_of(logits);
  const Matrix& lv = logits.value();
  const Eigen::Index n = lv.rows(), c = lv.cols();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw ShapeError("cross_entropy: " + shape(lv) + " logits for " + std::to_string(labels.size()) + " labels");
  }
  if (n == 0) throw std::invalid_argument("cross_entropy: empty batch");
  Matrix probs(n, c);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
    const double mx = lv.row(i).maxCoeff();
    const double total = (lv.row(i).array() - mx).exp().sum();
    const double lse = mx + std::log(total);
    loss += lse - lv(i, y);
    probs.row(i) = (lv.row(i).array() - lse).exp().matrix();
  }
  loss /= static_cast<double>(n);
  Matrix out(1, 1);
  out(0, 0) = loss;
  const std::size_t li = logits.id();
  std::vector<int> y(labels.begin(), labels.end());
  return t.record(std::move(out), {logits}, [li, probs = std::move(probs), y = std::move(y)](Tape& tp, std::size_t self) {
    const double g = tp.upstream(self)(0, 0) / static_cast<double>(y.size());
    Matrix d = probs;
    for (std::size_t i = 0; i < y.size(); ++i) d(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
    tp.grad_of(li) += d * g;
  });
}

Tensor sum(const Tensor& x) {
  Tape& t = tape_of(x);
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  const std::size_t xi = x.id();
  return t.record(std::move(out), {x}, [xi](Tape& tp, std::size_t self) {
    tp.grad_of(xi).array() += tp.upstream(self)(0, 0);
  });
}

GradCheckResult grad_check(const std::function<Tensor(Tape&)>& loss, std::span<Parameter* const> params, double eps) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Tensor l = loss(tape);
    tape.backward(l);
  }
  std::vector<Matrix> analytic;
  for (Parameter* p : params) analytic.push_back(p->has_grad ? p->grad : Matrix::Zero(p->value.rows(), p->value.cols()));

  auto eval = [&]() {
    Tape tape;
    return loss(tape).value()(0, 0);
  };

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double orig = p.value.data()[i];
      p.value.data()[i] = orig + eps;
      const double up = eval();
      p.value.data()[i] = orig - eps;
      const double down = eval();
      p.value.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k].data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p.name;
      }
      ++result.entries_checked;
    }
  }
  for (Parameter* p : params) p->zero_grad();
  return result;
}

}  // namespace flowgnn::ad
