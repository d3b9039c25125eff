#pragma once

#include "crayon/nn/graph.hpp"
#include "crayon/nn/ops.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace crayon::model {

// Standard Gumbel(0, 1) draw.
inline double gumbel_noise(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
  return -std::log(-std::log(unif(rng)));
}

// Relaxed one-hot sample: softmax((logits + g) / tau).
inline std::vector<double> gumbel_sample(std::span<const double> logits, double tau, std::mt19937_64& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_sample: temperature must be positive");
  if (logits.empty()) throw std::invalid_argument("gumbel_sample: empty distribution");
  std::vector<double> z(logits.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    z[i] = (logits[i] + gumbel_noise(rng)) / tau;
    mx = std::max(mx, z[i]);
  }
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return z;
}

// Differentiable batch version over row-wise log-probabilities.
template <typename S>
nn::Expr<S> gumbel_softmax(nn::Expr<S> log_probs, double tau, std::mt19937_64& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: temperature must be positive");
  nn::Matrix<S> noise(log_probs.rows(), log_probs.cols());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = static_cast<S>(gumbel_noise(rng));
  auto perturbed = log_probs + log_probs.graph->constant(std::move(noise));
  return nn::softmax(nn::affine(perturbed, static_cast<S>(1.0 / tau)));
}

}  // namespace crayon::model
