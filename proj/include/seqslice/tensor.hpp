#pragma once

// Dense float64 tensors with a reverse-mode tape.
//
// Tensors are shared handles: copying a Tensor aliases the same storage.
// Operations record a backward rule on the active Tape (see Tape::Scope) when
// at least one input requires a gradient; with no active tape they run as
// plain forward computations.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "seqslice/error.hpp"

namespace seqslice::tensor {

SEQSLICE_DEFINE_ERROR(ShapeError, false);
SEQSLICE_DEFINE_ERROR(IndexError, false);
SEQSLICE_DEFINE_ERROR(StateError, false);

using Shape = std::vector<std::size_t>;

/// Additive logit used for "minus infinity" masking. Finite, so 0 * mask
/// never produces NaN.
inline constexpr double kMaskValue = -1e30;
/// Lower clamp applied to probabilities before taking a log.
inline constexpr double kLogClamp = 1e-12;

std::string shape_str(const Shape& shape);

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::initializer_list<double> values,
                       bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t size() const;
  /// First dimension (1 for scalars).
  std::size_t rows() const;
  /// Last dimension (1 for scalars).
  std::size_t cols() const;

  std::span<const double> values() const;
  /// Writable view; only meant for leaves (parameters, inputs).
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  /// Gradient buffer; allocated (zero) on first access.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Copy of the values with no gradient tracking.
  Tensor detach() const;
  bool all_finite() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& handle() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Ordered record of executed differentiable operations.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Makes a tape the recording target for the current thread.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active();

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Propagates d(loss)/d(node) to every node on the tape, seeding the loss
  /// with 1. Leaf gradients accumulate across tapes until zero_grad().
  void backward(const Tensor& loss);
  /// Drops all records so the tape can be reused.
  void reset();

  void record(std::vector<std::shared_ptr<detail::Node>> inputs,
              std::shared_ptr<detail::Node> output, std::function<void()> rule);

  /// True when every record's inputs were produced earlier on the tape (or
  /// are leaves).
  bool topologically_ordered() const;

 private:
  struct Record {
    std::vector<std::shared_ptr<detail::Node>> inputs;
    std::shared_ptr<detail::Node> output;
    std::function<void()> rule;
  };
  std::vector<Record> records_;
  bool consumed_ = false;
};

// ---- operations -----------------------------------------------------------

/// [m x k] . [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// [m x k] . [n x k]^T
Tensor matmul_bt(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// Adds a length-n bias to every row of an [m x n] (or length-n) tensor.
Tensor add_bias(const Tensor& a, const Tensor& bias);
/// out[i, :] = a[i, :] * g[i]; g has m entries.
Tensor mul_rows(const Tensor& a, const Tensor& g);
/// 1 - a
Tensor one_minus(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

/// Numerically stable softmax along `axis` (0 or 1 for matrices, 0 for
/// vectors).
Tensor softmax(const Tensor& x, std::size_t axis);
/// Row-wise layer normalisation with learned gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

/// Gathers rows of `table` [V x d] -> [len x d].
Tensor embedding(const Tensor& table, std::span<const int> ids);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor reshape(const Tensor& x, Shape shape);

/// base with weights[i] accumulated at positions[i]; duplicates sum.
Tensor scatter_add(const Tensor& base, std::span<const int> positions,
                   const Tensor& weights);
/// Row-wise scatter_add over a leading batch dimension:
/// out[r, positions[i]] += weights[r, i].
Tensor scatter_add_rows(const Tensor& base, std::span<const int> positions,
                        const Tensor& weights);

/// -log(max(p[target], kLogClamp)) for a distribution vector.
Tensor cross_entropy(const Tensor& p, int target);
/// Mean over rows of -log(max(p[r, targets[r]], kLogClamp)).
Tensor cross_entropy(const Tensor& p, std::span<const int> targets);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

}  // namespace seqslice::tensor
