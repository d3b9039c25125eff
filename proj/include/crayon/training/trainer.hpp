#pragma once

#include "crayon/evaluation/evaluate.hpp"
#include "crayon/training/objective.hpp"
#include "crayon/training/optimizer.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace crayon::train {

// Raised when a loss turns non-finite. The message carries the dump.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalPoint {
  long step = 0;
  double valid_ppl = 0.0;
  double valid_reward = std::numeric_limits<double>::quiet_NaN();  // RL only
  bool best = false;
};

struct TrainResult {
  long steps = 0;
  long best_step = -1;
  double best_valid_ppl = std::numeric_limits<double>::infinity();
  double best_valid_reward = std::numeric_limits<double>::quiet_NaN();
  bool early_stopped = false;
  std::vector<EvalPoint> evals;
  std::vector<double> reward_trace;  // RL only: per-step sampled reward mean
};

struct TrainHooks {
  std::ostream* log = nullptr;                         // JSONL, one line per step
  std::function<void(const EvalPoint&)> on_eval;       // after every validation pass
};

template <typename S>
using Snapshot = std::vector<Matrix<S>>;

template <typename S>
Snapshot<S> snapshot(const Model<S>& m) {
  Snapshot<S> s;
  for (const auto& p : m.parameters().all()) s.push_back(p.value);
  return s;
}

template <typename S>
void restore(Model<S>& m, const Snapshot<S>& s) {
  std::size_t i = 0;
  for (auto& p : m.parameters().all()) p.value = s.at(i++);
}

namespace detail {

inline std::uint64_t epoch_seed(std::uint64_t seed, long epoch) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch) + 1;
}

inline void write_log(const TrainHooks& hooks, const nlohmann::json& line) {
  if (hooks.log != nullptr) *hooks.log << line.dump() << "\n";
}

inline std::string divergence_dump(long step, const nlohmann::json& values, const corpus::Batch& b) {
  nlohmann::json d{{"step", step}, {"losses", values}, {"batch_examples", b.source_index},
                   {"context_lengths", b.context_lengths}, {"response_lengths", b.response_lengths}};
  return "non-finite loss at step " + std::to_string(step) + ": " + d.dump();
}

inline bool finite(double x) { return std::isfinite(x); }

// Tracks a validation score (lower is better), the best snapshot and patience.
template <typename S>
struct Selector {
  TrainResult* result;
  int patience;
  Snapshot<S> best;
  int bad = 0;
  double best_score = std::numeric_limits<double>::infinity();

  bool observe(Model<S>& m, const EvalPoint& point, double score, const TrainHooks& hooks) {
    EvalPoint e = point;
    if (score < best_score) {
      best_score = score;
      result->best_valid_ppl = e.valid_ppl;
      result->best_valid_reward = e.valid_reward;
      result->best_step = e.step;
      best = snapshot(m);
      bad = 0;
      e.best = true;
    } else {
      ++bad;
    }
    result->evals.push_back(e);
    if (hooks.on_eval) hooks.on_eval(e);
    return bad >= patience;
  }
};

}  // namespace detail

// Maximum-likelihood stage. Validation perplexity uses gold attributes;
// the best-scoring parameters are restored at the end.
template <typename S>
TrainResult train_ml(Model<S>& m, const std::vector<corpus::AnnotatedExample>& train,
                     const std::vector<corpus::AnnotatedExample>& valid, const corpus::Vocabulary& vocab,
                     const TrainingConfig& cfg, const TrainHooks& hooks = {}) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("train_ml: empty training set");
  TrainResult result;
  detail::Selector<S> select{&result, cfg.patience, {}};
  Adam<S> opt(m.parameters(), cfg);
  std::mt19937_64 rng(cfg.seed);
  long step = 0;
  for (long epoch = 0; step < cfg.max_steps && !result.early_stopped; ++epoch) {
    for (const auto& b : corpus::make_batches(train, vocab, static_cast<std::size_t>(cfg.batch_size),
                                              detail::epoch_seed(cfg.seed, epoch))) {
      if (step >= cfg.max_steps) break;
      Graph<S> g;
      const auto f = ml_objective(g, m, b, cfg, step, rng);
      const LossBreakdown& l = f.values;
      const nlohmann::json values{{"nll", l.nll}, {"l_style", l.l_style}, {"c_bow", l.c_bow},
                                  {"acc", l.acc}, {"kl", l.kl},           {"total", l.total}};
      if (!detail::finite(l.total)) throw TrainingDiverged(detail::divergence_dump(step, values, b));
      g.backward(f.total);
      const double lr = learning_rate_at(cfg, step);
      const double norm = opt.step(step);
      nlohmann::json line = values;
      line["step"] = step;
      line["lr"] = lr;
      line["grad_norm"] = norm;
      detail::write_log(hooks, line);
      ++step;
      if (!valid.empty() && (step % cfg.eval_every == 0 || step == cfg.max_steps)) {
        const double ppl = eval::perplexity(m, vocab, valid, AttributeSource::oracle);
        if (select.observe(m, EvalPoint{step, ppl}, ppl, hooks)) {
          result.early_stopped = true;
          break;
        }
      }
    }
  }
  result.steps = step;
  if (!select.best.empty()) restore(m, select.best);
  return result;
}

// Mean greedy-decoding reward against gold attributes.
template <typename S>
double mean_reward(const Model<S>& m, const corpus::Vocabulary& vocab, const std::vector<corpus::AnnotatedExample>& examples,
                   const RewardConfig& reward_cfg, const attr::AnnotationResources& res,
                   const model::GenerateOptions& opt = {}) {
  if (examples.empty()) return 0.0;
  const auto hyps = eval::generate_responses(m, vocab, eval::contexts_of(examples), eval::gold_attributes(examples), opt);
  double total = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    total += attribute_consistency_reward(hyps[i], examples[i].dialogue.last_utterance(), examples[i].attributes,
                                          reward_cfg, res).total;
  }
  return total / static_cast<double>(examples.size());
}

// Reinforcement stage, starting from the current parameters. Checkpoints
// are selected by mean greedy validation reward; the starting parameters
// are scored as step 0, so the stage never returns a lower-reward model.
template <typename S>
TrainResult train_rl(Model<S>& m, const std::vector<corpus::AnnotatedExample>& train,
                     const std::vector<corpus::AnnotatedExample>& valid, const corpus::Vocabulary& vocab,
                     const TrainingConfig& cfg, const RewardConfig& reward_cfg, const attr::AnnotationResources& res,
                     const TrainHooks& hooks = {}) {
  cfg.validate();
  reward_cfg.validate();
  if (train.empty()) throw std::invalid_argument("train_rl: empty training set");
  TrainResult result;
  detail::Selector<S> select{&result, cfg.patience, {}};
  Adam<S> opt(m.parameters(), cfg);
  std::mt19937_64 rng(cfg.seed);
  const model::GenerateOptions greedy{false, 1.0, cfg.max_generation_length};
  auto validate = [&](long at) {
    EvalPoint e{at, eval::perplexity(m, vocab, valid, AttributeSource::oracle)};
    e.valid_reward = mean_reward(m, vocab, valid, reward_cfg, res, greedy);
    return select.observe(m, e, -e.valid_reward, hooks);
  };
  if (!valid.empty()) validate(0);
  long step = 0;
  for (long epoch = 0; step < cfg.max_steps && !result.early_stopped; ++epoch) {
    for (const auto& b : corpus::make_batches(train, vocab, static_cast<std::size_t>(cfg.batch_size),
                                              detail::epoch_seed(cfg.seed, epoch))) {
      if (step >= cfg.max_steps) break;
      Graph<S> g;
      const auto f = rl_objective(g, m, b, train, vocab, cfg, reward_cfg, res, rng);
      const RlStats& st = f.stats;
      nlohmann::json per = nlohmann::json::object();
      for (auto a : attr::kAllAttributes) per[std::string(attr::name_of(a))] = st.per_attribute_reward_means[attr::index_of(a)];
      nlohmann::json line{{"step", step},          {"reward_mean", st.reward_mean},
                          {"baseline_reward_mean", st.baseline_reward_mean},
                          {"per_attribute_reward_means", per},
                          {"rl_loss", st.rl_loss}, {"nll", st.nll},
                          {"total", st.total}};
      if (!detail::finite(st.total)) throw TrainingDiverged(detail::divergence_dump(step, line, b));
      g.backward(f.total);
      line["lr"] = learning_rate_at(cfg, step);
      line["grad_norm"] = opt.step(step);
      detail::write_log(hooks, line);
      result.reward_trace.push_back(st.reward_mean);
      ++step;
      if (!valid.empty() && (step % cfg.eval_every == 0 || step == cfg.max_steps)) {
        if (validate(step)) {
          result.early_stopped = true;
          break;
        }
      }
    }
  }
  result.steps = step;
  if (!select.best.empty()) restore(m, select.best);
  return result;
}

}  // namespace crayon::train
