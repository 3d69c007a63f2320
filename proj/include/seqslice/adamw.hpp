#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqslice/tensor.hpp"

namespace seqslice::tensor {

struct AdamWConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::size_t warmup_steps = 1000;
  /// Linear decay to zero after warmup ends at this step; 0 keeps lr flat.
  std::size_t total_steps = 0;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 1.0;
};

/// Learning rate used for the `step`-th update (1-based): linear warmup to
/// `lr` over warmup_steps, then linear decay to 0 at total_steps.
double scheduled_lr(const AdamWConfig& cfg, std::size_t step);

/// AdamW with decoupled weight decay. Moment buffers are indexed by the
/// position of each tensor in the parameter list passed to step().
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

  /// Applies one update from the gradients currently held by `params`.
  /// Returns the learning rate used.
  double step(std::span<Tensor> params);

  std::size_t steps_taken() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }

  /// Moment state, exposed for checkpointing.
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  void restore(std::size_t steps, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  AdamWConfig cfg_;
  std::size_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace seqslice::tensor
