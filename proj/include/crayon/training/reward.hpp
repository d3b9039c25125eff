#pragma once

#include "crayon/attributes/annotator.hpp"
#include "crayon/training/config.hpp"

#include <array>
#include <cstdlib>

namespace crayon::train {

// Exact match for unordered attributes; 1 − |ẑ − z*| / (# − 1) for binned ones.
inline double attribute_reward(RewardKind kind, int predicted, int target, int bins) {
  if (kind == RewardKind::discrete) return predicted == target ? 1.0 : 0.0;
  return 1.0 - static_cast<double>(std::abs(predicted - target)) / static_cast<double>(bins - 1);
}

struct RewardBreakdown {
  std::array<double, attr::kAttributeCount> per_attribute{};
  double total = 0.0;
  attr::AttributeVector reannotated;
};

// Re-annotates `generated` with the training-time resources and scores each
// attribute against `target`. An empty response earns nothing.
inline RewardBreakdown attribute_consistency_reward(const Tokens& generated, const Tokens& last_utterance,
                                                    const attr::AttributeVector& target, const RewardConfig& cfg,
                                                    const attr::AnnotationResources& res) {
  RewardBreakdown r;
  if (generated.empty()) return r;
  r.reannotated = attr::annotate_response(generated, last_utterance, res);
  for (auto a : attr::kAllAttributes) {
    const auto j = attr::index_of(a);
    r.per_attribute[j] = attribute_reward(cfg.kind[j], r.reannotated[a], target[a], cfg.bins[j]);
    r.total += r.per_attribute[j];
  }
  return r;
}

}  // namespace crayon::train
