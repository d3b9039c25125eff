#pragma once

#include "crayon/evaluation/evaluate.hpp"
#include "crayon/training/trainer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace crayon::eval {

struct AblationVariant {
  std::string label;
  std::array<bool, attr::kAttributeCount> enabled{};
};

// The baseline (no attribute enabled) followed by one variant per attribute.
inline std::vector<AblationVariant> ablation_variants() {
  std::vector<AblationVariant> out{{"baseline", {}}};
  for (auto a : attr::kAllAttributes) {
    AblationVariant v{"only_" + std::string(attr::name_of(a)), {}};
    v.enabled[attr::index_of(a)] = true;
    out.push_back(v);
  }
  return out;
}

// Trains one model per variant from the same initial seed and evaluates
// each with gold attributes on `test`.
template <typename S>
std::vector<EvalReport> single_attribute_ablation(
    const std::vector<AnnotatedExample>& train, const std::vector<AnnotatedExample>& valid,
    const std::vector<AnnotatedExample>& test, const Vocabulary& vocab, const AnnotationResources& res,
    model::ModelConfig model_cfg, const train::TrainingConfig& train_cfg, const model::GenerateOptions& opt,
    const std::function<void(const std::string&)>& progress = {}) {
  std::vector<EvalReport> reports;
  for (const auto& v : ablation_variants()) {
    if (progress) progress(v.label);
    model_cfg.enabled = v.enabled;
    model::Model<S> m(model_cfg);
    train::train_ml(m, train, valid, vocab, train_cfg);
    auto r = evaluate(m, vocab, test, res, Setting::oracle, opt);
    r.label = v.label;
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace crayon::eval
