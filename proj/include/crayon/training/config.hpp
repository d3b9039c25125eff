#pragma once

#include "crayon/attributes/schema.hpp"
#include "crayon/io.hpp"
#include "crayon/training/losses.hpp"

#include <array>
#include <cstdint>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace crayon::train {

enum class LrDecay { none, inverse_sqrt };

struct TrainingConfig {
  LossWeights weights;             // α, β, γ, λ1 and the post-switch λ2
  long kl_switch_step = 1000;      // λ2 is 0 before this step
  double gold_attribute_prob = 0.8;
  double learning_rate = 5e-4;     // peak, reached at the end of warm-up
  long warmup_steps = 500;
  LrDecay decay = LrDecay::none;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double max_grad_norm = 5.0;      // 0 disables clipping
  int batch_size = 64;
  long max_steps = 20000;
  long eval_every = 200;
  int patience = 5;
  double rl_weight = 0.5;          // η in η·L_rl + (1 − η)·L_nll
  int max_generation_length = 40;
  std::uint64_t seed = 1;

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(gold_attribute_prob) || !prob(rl_weight)) throw ConfigError("training: probabilities must lie in [0, 1]");
    if (!(learning_rate > 0.0)) throw ConfigError("training: learning_rate must be positive");
    if (batch_size <= 0 || max_steps < 0 || eval_every <= 0 || patience <= 0 || warmup_steps < 0) {
      throw ConfigError("training: batch_size, eval_every and patience must be positive");
    }
    if (max_generation_length < 1) throw ConfigError("training: max_generation_length must be >= 1");
  }

  // λ2 follows the step schedule; the other weights are fixed.
  LossWeights weights_at(long step) const {
    LossWeights w = weights;
    if (step < kl_switch_step) w.lambda2 = 0.0;
    return w;
  }
};

enum class RewardKind { discrete, continuous };

struct RewardConfig {
  std::array<RewardKind, attr::kAttributeCount> kind{};
  std::array<int, attr::kAttributeCount> bins{};  // # for continuous attributes

  static RewardConfig standard() {
    RewardConfig r;
    for (auto a : attr::kAllAttributes) {
      const auto j = attr::index_of(a);
      r.kind[j] = attr::is_continuous(a) ? RewardKind::continuous : RewardKind::discrete;
      r.bins[j] = attr::arity_of(a);
    }
    return r;
  }

  void validate() const {
    for (auto a : attr::kAllAttributes) {
      const auto j = attr::index_of(a);
      if (kind[j] == RewardKind::continuous && bins[j] < 2) {
        throw ConfigError("reward: continuous attribute " + std::string(attr::name_of(a)) + " needs >= 2 bins");
      }
    }
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError(where + ": unknown field '" + k + "'");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const TrainingConfig& c) {
  return {{"alpha", c.weights.alpha},
          {"beta", c.weights.beta},
          {"gamma", c.weights.gamma},
          {"lambda1", c.weights.lambda1},
          {"lambda2", c.weights.lambda2},
          {"kl_switch_step", c.kl_switch_step},
          {"gold_attribute_prob", c.gold_attribute_prob},
          {"learning_rate", c.learning_rate},
          {"warmup_steps", c.warmup_steps},
          {"decay", c.decay == LrDecay::none ? "none" : "inverse_sqrt"},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"max_grad_norm", c.max_grad_norm},
          {"batch_size", c.batch_size},
          {"max_steps", c.max_steps},
          {"eval_every", c.eval_every},
          {"patience", c.patience},
          {"rl_weight", c.rl_weight},
          {"max_generation_length", c.max_generation_length},
          {"seed", c.seed}};
}

inline void update_from_json(TrainingConfig& out, const nlohmann::json& j) {
  TrainingConfig c = out;
  detail::reject_unknown(j,
                         {"alpha", "beta", "gamma", "lambda1", "lambda2", "kl_switch_step", "gold_attribute_prob",
                          "learning_rate", "warmup_steps", "decay", "adam_beta1", "adam_beta2", "adam_eps",
                          "max_grad_norm", "batch_size", "max_steps", "eval_every", "patience", "rl_weight",
                          "max_generation_length", "seed"},
                         "training");
  try {
    c.weights.alpha = j.value("alpha", c.weights.alpha);
    c.weights.beta = j.value("beta", c.weights.beta);
    c.weights.gamma = j.value("gamma", c.weights.gamma);
    c.weights.lambda1 = j.value("lambda1", c.weights.lambda1);
    c.weights.lambda2 = j.value("lambda2", c.weights.lambda2);
    c.kl_switch_step = j.value("kl_switch_step", c.kl_switch_step);
    c.gold_attribute_prob = j.value("gold_attribute_prob", c.gold_attribute_prob);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    if (j.contains("decay")) {
      const auto d = j["decay"].get<std::string>();
      if (d == "none") c.decay = LrDecay::none;
      else if (d == "inverse_sqrt") c.decay = LrDecay::inverse_sqrt;
      else throw ConfigError("training: decay must be none or inverse_sqrt");
    }
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.patience = j.value("patience", c.patience);
    c.rl_weight = j.value("rl_weight", c.rl_weight);
    c.max_generation_length = j.value("max_generation_length", c.max_generation_length);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training: ") + e.what());
  }
  c.validate();
  out = c;
}

inline nlohmann::json to_json(const RewardConfig& r) {
  nlohmann::json j = nlohmann::json::object();
  for (auto a : attr::kAllAttributes) {
    const auto i = attr::index_of(a);
    j[std::string(attr::name_of(a))] = {{"kind", r.kind[i] == RewardKind::discrete ? "discrete" : "continuous"},
                                        {"bins", r.bins[i]}};
  }
  return j;
}

inline void update_from_json(RewardConfig& out, const nlohmann::json& j) {
  RewardConfig r = out;
  try {
    for (const auto& [name, spec] : j.items()) {
      auto a = attr::attribute_from_name(name);
      if (!a) throw ConfigError("reward: unknown attribute '" + name + "'");
      detail::reject_unknown(spec, {"kind", "bins"}, "reward." + name);
      const auto i = attr::index_of(*a);
      if (spec.contains("kind")) {
        const auto k = spec["kind"].get<std::string>();
        if (k != "discrete" && k != "continuous") throw ConfigError("reward: kind must be discrete or continuous");
        r.kind[i] = k == "discrete" ? RewardKind::discrete : RewardKind::continuous;
      }
      r.bins[i] = spec.value("bins", r.bins[i]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("reward: ") + e.what());
  }
  r.validate();
  out = r;
}

}  // namespace crayon::train
