#include "seqslice/adamw.hpp"

#include <cmath>

namespace seqslice::tensor {

double scheduled_lr(const AdamWConfig& cfg, std::size_t step) {
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) {
    return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  if (cfg.total_steps > cfg.warmup_steps) {
    if (step >= cfg.total_steps) return 0.0;
    const double remaining = static_cast<double>(cfg.total_steps - step);
    return cfg.lr * remaining / static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  }
  return cfg.lr;
}

double AdamW::step(std::span<Tensor> params) {
  if (m_.size() != params.size()) {
    m_.assign(params.size(), {});
    v_.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].size(), 0.0);
      v_[i].assign(params[i].size(), 0.0);
    }
  }
  ++step_;
  const double lr = scheduled_lr(cfg_, step_);

  double clip = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (auto& p : params)
      for (double g : p.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;
  }

  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_values();
    const auto g = params[i].grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k] * clip;
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * w[k]);
    }
  }
  return lr;
}

void AdamW::restore(std::size_t steps, std::vector<std::vector<double>> m,
                    std::vector<std::vector<double>> v) {
  step_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace seqslice::tensor
