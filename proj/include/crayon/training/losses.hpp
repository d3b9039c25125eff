#pragma once

// Individual loss terms. All return mean-per-example scalars (1x1 Exprs)
// in nats, built on the graph so they can be differentiated.

#include "crayon/attributes/schema.hpp"
#include "crayon/nn/graph.hpp"
#include "crayon/nn/ops.hpp"

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace crayon::train {

using nn::Expr;
using nn::Graph;
using nn::Matrix;

// Step-major targets: ids[t][b] with mask[t][b] ∈ {0, 1}.
struct StepTargets {
  int batch = 0;
  std::vector<std::vector<int>> ids;
  std::vector<std::vector<double>> mask;
};

struct LossBreakdown {
  double nll = 0;
  double l_style = 0;
  double c_bow = 0;
  double acc = 0;
  double kl = 0;
  double total = 0;
};

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;

  double combine(const LossBreakdown& l) const {
    return l.nll + alpha * l.l_style + beta * l.c_bow + gamma * (lambda1 * l.acc + lambda2 * l.kl);
  }
};

namespace detail {

template <typename S>
Expr<S> masked_pick(Expr<S> log_probs, const std::vector<int>& ids, const std::vector<double>& mask) {
  std::vector<int> idx(ids);
  std::vector<S> w(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    w[i] = static_cast<S>(mask[i]);
    if (w[i] == S(0)) idx[i] = 0;
  }
  return nn::pick_sum(log_probs, std::span<const int>(idx), std::span<const S>(w));
}

template <typename S>
Expr<S> sum_terms(Graph<S>& g, const std::vector<Expr<S>>& terms) {
  if (terms.empty()) return g.scalar(S(0));
  Expr<S> acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = acc + terms[i];
  return acc;
}

}  // namespace detail

// −Σ_t log P(y_t | ·), masked, averaged over the batch.
template <typename S>
Expr<S> nll_loss(Graph<S>& g, std::span<const Expr<S>> step_log_probs, const StepTargets& targets) {
  if (step_log_probs.size() != targets.ids.size()) throw std::invalid_argument("nll_loss: step count mismatch");
  std::vector<Expr<S>> terms;
  for (std::size_t t = 0; t < step_log_probs.size(); ++t) {
    terms.push_back(detail::masked_pick(step_log_probs[t], targets.ids[t], targets.mask[t]));
  }
  return nn::affine(detail::sum_terms(g, terms), static_cast<S>(-1.0 / targets.batch));
}

// −Σ_k Σ_t log P(v*_kt | h_t), over the enabled local attributes.
// labels[k] holds step-major bin labels for local attribute k.
template <typename S>
Expr<S> local_style_loss(Graph<S>& g, std::span<const std::array<Expr<S>, attr::kLocalAttributeCount>> step_log_probs,
                         const std::array<StepTargets, attr::kLocalAttributeCount>& labels,
                         std::array<bool, attr::kLocalAttributeCount> enabled = {true, true}) {
  std::vector<Expr<S>> terms;
  int batch = 1;
  for (std::size_t k = 0; k < attr::kLocalAttributeCount; ++k) {
    const auto& lab = labels[k];
    batch = lab.batch;
    if (!enabled[k]) continue;
    if (lab.ids.size() != step_log_probs.size()) throw std::invalid_argument("local_style_loss: step count mismatch");
    for (std::size_t t = 0; t < step_log_probs.size(); ++t) {
      for (std::size_t b = 0; b < lab.ids[t].size(); ++b) {
        if (lab.mask[t][b] != 0.0 && (lab.ids[t][b] < 0 || lab.ids[t][b] >= attr::kTokenBins)) {
          throw std::out_of_range("local_style_loss: label outside [0, 6)");
        }
      }
      terms.push_back(detail::masked_pick(step_log_probs[t][k], lab.ids[t], lab.mask[t]));
    }
  }
  return nn::affine(detail::sum_terms(g, terms), static_cast<S>(-1.0 / batch));
}

// −Σ_t log P_b(y_t): order-free, so repeated words count once per occurrence.
template <typename S>
Expr<S> cbow_loss(Graph<S>& g, Expr<S> bow_log_probs, const std::vector<std::vector<int>>& gold) {
  if (static_cast<Eigen::Index>(gold.size()) != bow_log_probs.rows()) throw std::invalid_argument("cbow_loss: batch mismatch");
  std::size_t longest = 0;
  for (const auto& r : gold) longest = std::max(longest, r.size());
  std::vector<Expr<S>> terms;
  for (std::size_t t = 0; t < longest; ++t) {
    std::vector<int> ids(gold.size(), 0);
    std::vector<double> mask(gold.size(), 0.0);
    for (std::size_t b = 0; b < gold.size(); ++b) {
      if (t < gold[b].size()) {
        ids[b] = gold[b][t];
        mask[b] = 1.0;
      }
    }
    terms.push_back(detail::masked_pick(bow_log_probs, ids, mask));
  }
  return nn::affine(detail::sum_terms(g, terms), static_cast<S>(-1.0 / static_cast<double>(gold.size())));
}

template <typename S>
struct AttributeLosses {
  Expr<S> acc;
  Expr<S> kl;
};

// acc = −Σ_j log P′(z_j* | x, y); kl = Σ_j KL(P′_j ‖ P_j). Both arguments
// are row-wise log-probabilities, so KL gradients reach prior and posterior.
template <typename S>
AttributeLosses<S> attribute_losses(Graph<S>& g, const std::array<Expr<S>, attr::kAttributeCount>& prior,
                                    const std::array<Expr<S>, attr::kAttributeCount>& posterior,
                                    const std::vector<attr::AttributeVector>& gold,
                                    std::array<bool, attr::kAttributeCount> enabled = {true, true, true, true, true}) {
  std::vector<Expr<S>> acc_terms, kl_terms;
  const std::vector<double> ones(gold.size(), 1.0);
  for (attr::Attribute a : attr::kAllAttributes) {
    const auto j = attr::index_of(a);
    if (!enabled[j]) continue;
    std::vector<int> ids;
    for (const auto& v : gold) ids.push_back(v[a]);
    acc_terms.push_back(detail::masked_pick(posterior[j], ids, ones));
    kl_terms.push_back(nn::sum_all(nn::cmul(nn::exp(posterior[j]), posterior[j] - prior[j])));
  }
  const S scale = static_cast<S>(1.0 / static_cast<double>(gold.size()));
  return {nn::affine(detail::sum_terms(g, acc_terms), -scale), nn::affine(detail::sum_terms(g, kl_terms), scale)};
}

// Self-critical policy-gradient loss −(R(y^s) − R(ŷ)) · log P(y^s), mean over
// the batch. The advantage enters as a constant weight on the sampled
// tokens' log-probabilities.
template <typename S>
Expr<S> self_critical_loss(Graph<S>& g, std::span<const Expr<S>> step_log_probs,
                           const std::vector<std::vector<int>>& chosen, const std::vector<std::vector<S>>& active,
                           const std::vector<double>& advantage) {
  const std::size_t batch = advantage.size();
  std::vector<Expr<S>> terms;
  for (std::size_t t = 0; t < step_log_probs.size(); ++t) {
    std::vector<double> w(batch);
    for (std::size_t b = 0; b < batch; ++b) w[b] = static_cast<double>(active[t][b]) * advantage[b];
    bool any = false;
    for (double x : w) any = any || x != 0.0;
    if (any) terms.push_back(detail::masked_pick(step_log_probs[t], chosen[t], w));
  }
  return nn::affine(detail::sum_terms(g, terms), static_cast<S>(-1.0 / static_cast<double>(batch)));
}

}  // namespace crayon::train
