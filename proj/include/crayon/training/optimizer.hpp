#pragma once

#include "crayon/nn/layers.hpp"
#include "crayon/training/config.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace crayon::train {

// Learning rate for the 0-based `step`: linear warm-up to the peak, then
// constant or inverse-square-root decay.
inline double learning_rate_at(const TrainingConfig& cfg, long step) {
  const double s = static_cast<double>(step + 1);
  const double w = static_cast<double>(cfg.warmup_steps);
  if (cfg.warmup_steps > 0 && s < w) return cfg.learning_rate * s / w;
  if (cfg.decay == LrDecay::inverse_sqrt && cfg.warmup_steps > 0) return cfg.learning_rate * std::sqrt(w / s);
  return cfg.learning_rate;
}

template <typename S>
double global_grad_norm(const nn::ParameterStore<S>& store) {
  double sq = 0.0;
  for (const auto& p : store.all()) {
    if (p.grad.size() == 0) continue;
    sq += p.grad.template cast<double>().squaredNorm();
  }
  return std::sqrt(sq);
}

template <typename S>
class Adam {
 public:
  Adam(nn::ParameterStore<S>& store, const TrainingConfig& cfg) : store_(&store), cfg_(cfg) {
    for (const auto& p : store.all()) {
      m_.push_back(Matrix<S>::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix<S>::Zero(p.value.rows(), p.value.cols()));
    }
  }

  // Clips the global gradient norm, applies one update and clears the
  // gradients. Returns the norm before clipping.
  double step(long step) {
    const double norm = global_grad_norm(*store_);
    double scale = 1.0;
    if (cfg_.max_grad_norm > 0.0 && norm > cfg_.max_grad_norm) scale = cfg_.max_grad_norm / norm;
    ++t_;
    const double lr = learning_rate_at(cfg_, step);
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    const S b1 = static_cast<S>(cfg_.adam_beta1), b2 = static_cast<S>(cfg_.adam_beta2);
    std::size_t i = 0;
    for (auto& p : store_->all()) {
      auto& m = m_[i];
      auto& v = v_[i];
      ++i;
      if (p.grad.size() == 0) continue;
      const Matrix<S> g = p.grad * static_cast<S>(scale);
      m = b1 * m + (S(1) - b1) * g;
      v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
      const S step_size = static_cast<S>(lr / c1);
      const S denom_scale = static_cast<S>(1.0 / std::sqrt(c2));
      p.value.array() -= step_size * m.array() / ((v.array().sqrt() * denom_scale) + static_cast<S>(cfg_.adam_eps));
      p.zero_grad();
    }
    return norm;
  }

  long updates() const { return t_; }

 private:
  nn::ParameterStore<S>* store_;
  TrainingConfig cfg_;
  std::vector<Matrix<S>> m_, v_;
  long t_ = 0;
};

}  // namespace crayon::train
