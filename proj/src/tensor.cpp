#include "seqslice/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace seqslice::tensor {

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool produced = false;  // output of a recorded op
  const Tape* tape = nullptr;
};
}  // namespace detail

using detail::Node;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

thread_local Tape* g_active_tape = nullptr;

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> values,
                                bool requires_grad) {
  if (product(shape) != values.size()) {
    throw ShapeError("tensor of shape " + shape_str(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0);
  return node;
}

double* grad_of(Node* n) {
  if (!n->requires_grad) return nullptr;
  if (n->grad.empty()) n->grad.assign(n->value.size(), 0.0);
  return n->grad.data();
}

/// Builds an op result and, when recording, registers `rule(dout)`.
template <class Rule>
Tensor emit(Shape shape, std::vector<double> values,
            std::initializer_list<const Tensor*> inputs, Rule&& rule) {
  auto out = make_node(std::move(shape), std::move(values), false);
  Tape* tape = Tape::active();
  bool track = false;
  if (tape) {
    for (const Tensor* t : inputs) track = track || t->requires_grad();
  }
  if (track) {
    out->requires_grad = true;
    out->produced = true;
    out->tape = tape;
    std::vector<std::shared_ptr<Node>> ins;
    ins.reserve(inputs.size());
    for (const Tensor* t : inputs) ins.push_back(t->handle());
    Node* o = out.get();
    tape->record(std::move(ins), out,
                 [o, r = std::forward<Rule>(rule)]() mutable {
                   if (o->grad.empty()) return;
                   r(o->grad, o->value);
                 });
  }
  return Tensor(std::move(out));
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw ShapeError(std::string(op) + " expects a matrix, got " +
                     shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

CMatMap cmap(const Node* n, std::size_t r, std::size_t c) {
  return CMatMap(n->value.data(), static_cast<Eigen::Index>(r),
                 static_cast<Eigen::Index>(c));
}

MatMap gmap(double* g, std::size_t r, std::size_t c) {
  return MatMap(g, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = product(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const auto n = product(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_node({}, {value}, requires_grad));
}

Tensor Tensor::vector(std::initializer_list<double> values, bool requires_grad) {
  return Tensor(make_node({values.size()}, std::vector<double>(values), requires_grad));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Tensor(make_node({r, c}, std::move(v), requires_grad));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }
std::size_t Tensor::rows() const { return node_->shape.empty() ? 1 : node_->shape.front(); }
std::size_t Tensor::cols() const { return node_->shape.empty() ? 1 : node_->shape.back(); }
std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::mutable_values() { return node_->value; }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

double Tensor::at(std::size_t i) const {
  if (i >= size()) throw IndexError("index " + std::to_string(i) + " out of range");
  return node_->value[i];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (ndim() != 2 || r >= rows() || c >= cols()) {
    throw IndexError("index (" + std::to_string(r) + ", " + std::to_string(c) +
                     ") out of range for " + shape_str(shape()));
  }
  return node_->value[r * cols() + c];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  if (on && node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
}

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return Tensor(make_node(node_->shape, node_->value, false));
}

bool Tensor::all_finite() const {
  return std::all_of(node_->value.begin(), node_->value.end(),
                     [](double v) { return std::isfinite(v); });
}

// ---- Tape -----------------------------------------------------------------

Tape::Scope::Scope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
Tape::Scope::~Scope() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::vector<std::shared_ptr<Node>> inputs,
                  std::shared_ptr<Node> output, std::function<void()> rule) {
  records_.push_back({std::move(inputs), std::move(output), std::move(rule)});
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw StateError("backward() called twice without reset()");
  if (!loss.defined() || loss.size() != 1) {
    throw StateError("backward() needs a scalar loss");
  }
  Node* root = loss.node();
  if (!root->produced || root->tape != this) {
    throw StateError("loss was not produced on this tape");
  }
  consumed_ = true;
  for (auto& rec : records_) {
    if (rec.output.get() != root) rec.output->grad.clear();
  }
  root->grad.assign(1, 1.0);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->rule();
}

void Tape::reset() {
  records_.clear();
  consumed_ = false;
}

bool Tape::topologically_ordered() const {
  std::vector<const Node*> seen;
  for (const auto& rec : records_) {
    for (const auto& in : rec.inputs) {
      if (in->produced && in->tape == this &&
          std::find(seen.begin(), seen.end(), in.get()) == seen.end()) {
        return false;
      }
    }
    seen.push_back(rec.output.get());
  }
  return true;
}

// ---- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  gmap(out.data(), m, n).noalias() = cmap(a.node(), m, k) * cmap(b.node(), k, n);
  Node* na = a.node();
  Node* nb = b.node();
  return emit({m, n}, std::move(out), {&a, &b},
              [na, nb, m, k, n](const std::vector<double>& g, const std::vector<double>&) {
                CMatMap G(g.data(), m, n);
                if (double* ga = grad_of(na)) gmap(ga, m, k).noalias() += G * cmap(nb, k, n).transpose();
                if (double* gb = grad_of(nb)) gmap(gb, k, n).noalias() += cmap(na, m, k).transpose() * G;
              });
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_bt");
  require_matrix(b, "matmul_bt");
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_bt: inner dimensions differ, " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()) + "^T");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n);
  gmap(out.data(), m, n).noalias() = cmap(a.node(), m, k) * cmap(b.node(), n, k).transpose();
  Node* na = a.node();
  Node* nb = b.node();
  return emit({m, n}, std::move(out), {&a, &b},
              [na, nb, m, k, n](const std::vector<double>& g, const std::vector<double>&) {
                CMatMap G(g.data(), m, n);
                if (double* ga = grad_of(na)) gmap(ga, m, k).noalias() += G * cmap(nb, n, k);
                if (double* gb = grad_of(nb)) gmap(gb, n, k).noalias() += G.transpose() * cmap(na, m, k);
              });
}

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  Node* na = a.node();
  Node* nb = b.node();
  return emit(a.shape(), std::move(out), {&a, &b}, [na, nb](const std::vector<double>& g, const std::vector<double>&) {
    if (double* ga = grad_of(na)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (double* gb = grad_of(nb)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  Node* na = a.node();
  Node* nb = b.node();
  return emit(a.shape(), std::move(out), {&a, &b}, [na, nb](const std::vector<double>& g, const std::vector<double>&) {
    if (double* ga = grad_of(na)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (double* gb = grad_of(nb)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  Node* na = a.node();
  Node* nb = b.node();
  return emit(a.shape(), std::move(out), {&a, &b}, [na, nb](const std::vector<double>& g, const std::vector<double>&) {
    if (double* ga = grad_of(na)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * nb->value[i];
    if (double* gb = grad_of(nb)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * na->value[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= factor;
  Node* na = a.node();
  return emit(a.shape(), std::move(out), {&a}, [na, factor](const std::vector<double>& g, const std::vector<double>&) {
    if (double* ga = grad_of(na)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  if (bias.ndim() != 1 || bias.size() != a.cols()) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not fit " +
                     shape_str(a.shape()));
  }
  const std::size_t n = a.cols(), m = a.size() / n;
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = bias.values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bv[c];
  Node* na = a.node();
  Node* nb = bias.node();
  return emit(a.shape(), std::move(out), {&a, &bias}, [na, nb, m, n](const std::vector<double>& g, const std::vector<double>&) {
    if (double* ga = grad_of(na)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (double* gb = grad_of(nb))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
  });
}

Tensor mul_rows(const Tensor& a, const Tensor& gate) {
  const std::size_t m = a.ndim() == 2 ? a.rows() : 1;
  const std::size_t n = a.cols();
  if (gate.size() != m) {
    throw ShapeError("mul_rows: gate " + shape_str(gate.shape()) + " does not fit " +
                     shape_str(a.shape()));
  }
  std::vector<double> out(a.size());
  const auto av = a.values(), gv = gate.values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = av[r * n + c] * gv[r];
  Node* na = a.node();
  Node* ng = gate.node();
  return emit(a.shape(), std::move(out), {&a, &gate}, [na, ng, m, n](const std::vector<double>& g, const std::vector<double>&) {
    double* ga = grad_of(na);
    double* gg = grad_of(ng);
    for (std::size_t r = 0; r < m; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double go = g[r * n + c];
        if (ga) ga[r * n + c] += go * ng->value[r];
        acc += go * na->value[r * n + c];
      }
      if (gg) gg[r] += acc;
    }
  });
}

Tensor one_minus(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - av[i];
  Node* na = a.node();
  return emit(a.shape(), std::move(out), {&a}, [na](const std::vector<double>& g, const std::vector<double>&) {
    if (double* ga = grad_of(na)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  Node* na = a.node();
  return emit(a.shape(), std::move(out), {&a}, [na](const std::vector<double>& g, const std::vector<double>&) {
    if (double* ga = grad_of(na))
      for (std::size_t i = 0; i < g.size(); ++i)
        if (na->value[i] > 0.0) ga[i] += g[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    if (x >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  Node* na = a.node();
  return emit(a.shape(), std::move(out), {&a},
              [na](const std::vector<double>& g, const std::vector<double>& y) {
                if (double* ga = grad_of(na))
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
              });
}

// ---- normalisation --------------------------------------------------------

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (x.ndim() == 0 || x.ndim() > 2 || axis >= x.ndim()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for " +
                     shape_str(x.shape()));
  }
  // View as [outer x len] with a stride between consecutive entries.
  const std::size_t rows = x.ndim() == 2 ? x.rows() : 1;
  const std::size_t cols = x.cols();
  const bool along_cols = x.ndim() == 1 || axis == 1;
  const std::size_t lanes = along_cols ? rows : cols;
  const std::size_t len = along_cols ? cols : rows;
  const std::size_t stride = along_cols ? 1 : cols;
  const std::size_t lane_step = along_cols ? cols : 1;

  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t l = 0; l < lanes; ++l) {
    const std::size_t base = l * lane_step;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, xv[base + i * stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = std::exp(xv[base + i * stride] - mx);
      out[base + i * stride] = e;
      total += e;
    }
    for (std::size_t i = 0; i < len; ++i) out[base + i * stride] /= total;
  }
  Node* nx = x.node();
  return emit(x.shape(), std::move(out), {&x},
              [nx, lanes, len, stride, lane_step](const std::vector<double>& g,
                                                  const std::vector<double>& y) {
                double* gx = grad_of(nx);
                if (!gx) return;
                for (std::size_t l = 0; l < lanes; ++l) {
                  const std::size_t base = l * lane_step;
                  double dot = 0.0;
                  for (std::size_t i = 0; i < len; ++i) {
                    const std::size_t k = base + i * stride;
                    dot += g[k] * y[k];
                  }
                  for (std::size_t i = 0; i < len; ++i) {
                    const std::size_t k = base + i * stride;
                    gx[k] += y[k] * (g[k] - dot);
                  }
                }
              });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw ShapeError("layer_norm: gain/bias do not match " + shape_str(x.shape()));
  }
  const std::size_t m = x.size() / n;
  std::vector<double> out(x.size());
  auto xhat = std::make_shared<std::vector<double>>(x.size());
  auto inv_std = std::make_shared<std::vector<double>>(m);
  const auto xv = x.values(), gv = gain.values(), bv = bias.values();
  for (std::size_t r = 0; r < m; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += xv[r * n + c];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = xv[r * n + c] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (xv[r * n + c] - mu) * is;
      (*xhat)[r * n + c] = h;
      out[r * n + c] = h * gv[c] + bv[c];
    }
  }
  Node* nx = x.node();
  Node* ng = gain.node();
  Node* nb = bias.node();
  return emit(x.shape(), std::move(out), {&x, &gain, &bias},
              [nx, ng, nb, m, n, xhat, inv_std](const std::vector<double>& g,
                                                const std::vector<double>&) {
                double* gx = grad_of(nx);
                double* gg = grad_of(ng);
                double* gb = grad_of(nb);
                const auto& h = *xhat;
                for (std::size_t r = 0; r < m; ++r) {
                  double sum_dh = 0.0, sum_dh_h = 0.0;
                  for (std::size_t c = 0; c < n; ++c) {
                    const std::size_t k = r * n + c;
                    const double dh = g[k] * ng->value[c];
                    sum_dh += dh;
                    sum_dh_h += dh * h[k];
                    if (gg) gg[c] += g[k] * h[k];
                    if (gb) gb[c] += g[k];
                  }
                  if (!gx) continue;
                  const double inv_n = 1.0 / static_cast<double>(n);
                  for (std::size_t c = 0; c < n; ++c) {
                    const std::size_t k = r * n + c;
                    const double dh = g[k] * ng->value[c];
                    gx[k] += (*inv_std)[r] * (dh - inv_n * sum_dh - h[k] * inv_n * sum_dh_h);
                  }
                }
              });
}

// ---- indexing -------------------------------------------------------------

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  require_matrix(table, "embedding");
  const std::size_t vocab = table.rows(), d = table.cols();
  std::vector<int> rows(ids.begin(), ids.end());
  std::vector<double> out(rows.size() * d);
  const auto tv = table.values();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= vocab) {
      throw IndexError("embedding id " + std::to_string(rows[i]) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(rows[i] * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  Node* nt = table.node();
  const std::size_t n = rows.size();
  return emit({n, d}, std::move(out), {&table},
              [nt, rows = std::move(rows), d](const std::vector<double>& g,
                                              const std::vector<double>&) {
                double* gt = grad_of(nt);
                if (!gt) return;
                for (std::size_t i = 0; i < rows.size(); ++i)
                  for (std::size_t c = 0; c < d; ++c) gt[rows[i] * d + c] += g[i * d + c];
              });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  require_matrix(x, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  if (start + count > n) {
    throw IndexError("slice_cols [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + shape_str(x.shape()));
  }
  std::vector<double> out(m * count);
  const auto xv = x.values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < count; ++c) out[r * count + c] = xv[r * n + start + c];
  Node* nx = x.node();
  return emit({m, count}, std::move(out), {&x},
              [nx, m, n, start, count](const std::vector<double>& g, const std::vector<double>&) {
                double* gx = grad_of(nx);
                if (!gx) return;
                for (std::size_t r = 0; r < m; ++r)
                  for (std::size_t c = 0; c < count; ++c) gx[r * n + start + c] += g[r * count + c];
              });
}

Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count) {
  require_matrix(x, "slice_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (start + count > m) {
    throw IndexError("slice_rows [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + shape_str(x.shape()));
  }
  const auto xv = x.values();
  std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(start * n),
                          xv.begin() + static_cast<std::ptrdiff_t>((start + count) * n));
  Node* nx = x.node();
  return emit({count, n}, std::move(out), {&x},
              [nx, n, start](const std::vector<double>& g, const std::vector<double>&) {
                double* gx = grad_of(nx);
                if (!gx) return;
                for (std::size_t i = 0; i < g.size(); ++i) gx[start * n + i] += g[i];
              });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t m = parts.front().ndim() == 2 ? parts.front().rows() : 1;
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    const std::size_t pm = p.ndim() == 2 ? p.rows() : 1;
    if (p.ndim() > 2 || pm != m) {
      throw ShapeError("concat_cols: " + shape_str(p.shape()) + " does not stack with " +
                       shape_str(parts.front().shape()));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].values();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < widths[k]; ++c)
        out[r * total + offset + c] = pv[r * widths[k] + c];
    offset += widths[k];
  }
  Shape shape = parts.front().ndim() == 2 ? Shape{m, total} : Shape{total};

  auto result = Tensor::from_values(shape, std::move(out));
  Tape* tape = Tape::active();
  bool track = false;
  if (tape) {
    for (const auto& p : parts) track = track || p.requires_grad();
  }
  if (!track) return result;

  auto node = result.handle();
  node->requires_grad = true;
  node->produced = true;
  node->tape = tape;
  std::vector<std::shared_ptr<Node>> ins;
  std::vector<Node*> raw;
  for (const auto& p : parts) {
    ins.push_back(p.handle());
    raw.push_back(p.node());
  }
  Node* o = node.get();
  tape->record(std::move(ins), node, [o, raw, widths, m, total]() {
    if (o->grad.empty()) return;
    std::size_t off = 0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (double* gp = grad_of(raw[k])) {
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c)
            gp[r * widths[k] + c] += o->grad[r * total + off + c];
      }
      off += widths[k];
    }
  });
  return result;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (product(shape) != x.size()) {
    throw ShapeError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  Node* nx = x.node();
  return emit(std::move(shape), std::move(out), {&x},
              [nx](const std::vector<double>& g, const std::vector<double>&) {
                if (double* gx = grad_of(nx))
                  for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
              });
}

Tensor scatter_add(const Tensor& base, std::span<const int> positions, const Tensor& weights) {
  if (base.ndim() != 1) throw ShapeError("scatter_add: base must be a vector, got " + shape_str(base.shape()));
  if (weights.size() != positions.size()) {
    throw ShapeError("scatter_add: " + std::to_string(positions.size()) + " positions but weights " +
                     shape_str(weights.shape()));
  }
  std::vector<int> pos(positions.begin(), positions.end());
  std::vector<double> out(base.values().begin(), base.values().end());
  const auto wv = weights.values();
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (pos[i] < 0 || static_cast<std::size_t>(pos[i]) >= out.size()) {
      throw IndexError("scatter_add position " + std::to_string(pos[i]) + " outside " +
                       shape_str(base.shape()));
    }
    out[pos[i]] += wv[i];
  }
  Node* nb = base.node();
  Node* nw = weights.node();
  return emit(base.shape(), std::move(out), {&base, &weights},
              [nb, nw, pos = std::move(pos)](const std::vector<double>& g, const std::vector<double>&) {
                if (double* gb = grad_of(nb)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                if (double* gw = grad_of(nw)) for (std::size_t i = 0; i < pos.size(); ++i) gw[i] += g[pos[i]];
              });
}

Tensor scatter_add_rows(const Tensor& base, std::span<const int> positions, const Tensor& weights) {
  require_matrix(base, "scatter_add_rows");
  require_matrix(weights, "scatter_add_rows");
  const std::size_t m = base.rows(), n = base.cols(), len = positions.size();
  if (weights.rows() != m || weights.cols() != len) {
    throw ShapeError("scatter_add_rows: weights " + shape_str(weights.shape()) + " vs " +
                     std::to_string(len) + " positions over " + shape_str(base.shape()));
  }
  std::vector<int> pos(positions.begin(), positions.end());
  for (int p : pos) {
    if (p < 0 || static_cast<std::size_t>(p) >= n) {
      throw IndexError("scatter_add_rows position " + std::to_string(p) + " outside " +
                       shape_str(base.shape()));
    }
  }
  std::vector<double> out(base.values().begin(), base.values().end());
  const auto wv = weights.values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t i = 0; i < len; ++i) out[r * n + pos[i]] += wv[r * len + i];
  Node* nb = base.node();
  Node* nw = weights.node();
  return emit(base.shape(), std::move(out), {&base, &weights},
              [nb, nw, pos = std::move(pos), m, n, len](const std::vector<double>& g,
                                                         const std::vector<double>&) {
                if (double* gb = grad_of(nb)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                if (double* gw = grad_of(nw))
                  for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t i = 0; i < len; ++i) gw[r * len + i] += g[r * n + pos[i]];
              });
}

// ---- losses and reductions ------------------------------------------------

Tensor cross_entropy(const Tensor& p, int target) {
  if (p.ndim() != 1) throw ShapeError("cross_entropy expects a distribution vector");
  const int t = target;
  return cross_entropy(reshape(p, {1, p.size()}), std::span<const int>(&t, 1));
}

Tensor cross_entropy(const Tensor& p, std::span<const int> targets) {
  require_matrix(p, "cross_entropy");
  const std::size_t m = p.rows(), n = p.cols();
  if (targets.size() != m) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     shape_str(p.shape()));
  }
  std::vector<int> tg(targets.begin(), targets.end());
  const auto pv = p.values();
  double loss = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (tg[r] < 0 || static_cast<std::size_t>(tg[r]) >= n) {
      throw IndexError("cross_entropy target " + std::to_string(tg[r]) + " outside " +
                       std::to_string(n) + " classes");
    }
    loss -= std::log(std::max(pv[r * n + tg[r]], kLogClamp));
  }
  loss /= static_cast<double>(m);
  Node* np = p.node();
  return emit({}, {loss}, {&p},
              [np, tg = std::move(tg), m, n](const std::vector<double>& g, const std::vector<double>&) {
                double* gp = grad_of(np);
                if (!gp) return;
                for (std::size_t r = 0; r < m; ++r) {
                  const double q = np->value[r * n + tg[r]];
                  if (q > kLogClamp) gp[r * n + tg[r]] -= g[0] / (static_cast<double>(m) * q);
                }
              });
}

Tensor sum(const Tensor& x) {
  const auto xv = x.values();
  const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  Node* nx = x.node();
  return emit({}, {total}, {&x}, [nx](const std::vector<double>& g, const std::vector<double>&) {
    if (double* gx = grad_of(nx))
      for (std::size_t i = 0; i < nx->value.size(); ++i) gx[i] += g[0];
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

}  // namespace seqslice::tensor
