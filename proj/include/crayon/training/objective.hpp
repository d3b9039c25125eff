#pragma once

#include "crayon/corpus/batch.hpp"
#include "crayon/model/generate.hpp"
#include "crayon/model/gumbel.hpp"
#include "crayon/model/model.hpp"
#include "crayon/training/config.hpp"
#include "crayon/training/losses.hpp"
#include "crayon/training/reward.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace crayon::train {

using corpus::Batch;
using model::ControlVectors;
using model::Dropout;
using model::EncoderOutput;
using model::Model;

inline StepTargets word_targets(const Batch& b) {
  StepTargets t;
  t.batch = b.size;
  for (int s = 0; s < b.decode_steps(); ++s) {
    std::vector<int> ids;
    std::vector<double> mask;
    for (int r = 0; r < b.size; ++r) {
      ids.push_back(b.target_at(r, s));
      mask.push_back(b.target_mask(r, s));
    }
    t.ids.push_back(std::move(ids));
    t.mask.push_back(std::move(mask));
  }
  return t;
}

// Style labels align with real response tokens; the </s> step is masked.
inline std::array<StepTargets, attr::kLocalAttributeCount> style_targets(const Batch& b) {
  std::array<StepTargets, attr::kLocalAttributeCount> out;
  for (int k = 0; k < 2; ++k) {
    auto& t = out[static_cast<std::size_t>(k)];
    t.batch = b.size;
    for (int s = 0; s < b.decode_steps(); ++s) {
      std::vector<int> ids;
      std::vector<double> mask;
      for (int r = 0; r < b.size; ++r) {
        const bool real = s < b.response_width && b.token_mask(r, s) > 0.0;
        ids.push_back(real ? b.label(r, k, s) : 0);
        mask.push_back(real ? 1.0 : 0.0);
      }
      t.ids.push_back(std::move(ids));
      t.mask.push_back(std::move(mask));
    }
  }
  return out;
}

inline std::vector<std::vector<int>> gold_tokens(const Batch& b) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(b.size));
  for (int r = 0; r < b.size; ++r) {
    for (int t = 0; t < b.response_lengths[static_cast<std::size_t>(r)]; ++t) out[static_cast<std::size_t>(r)].push_back(b.response_id(r, t));
  }
  return out;
}

template <typename S>
struct TeacherForced {
  std::vector<Expr<S>> log_probs;
  std::vector<std::array<Expr<S>, attr::kLocalAttributeCount>> style;
};

// Runs both decoder stages over the gold response prefix.
template <typename S>
TeacherForced<S> teacher_force(Graph<S>& g, const Model<S>& m, const Batch& b, const EncoderOutput<S>& enc,
                               const ControlVectors<S>& control, const Dropout<S>& drop) {
  TeacherForced<S> out;
  Expr<S> local = m.style_initial(g, enc.final);
  Expr<S> response = m.response_initial(g, enc.final);
  std::vector<int> inputs(static_cast<std::size_t>(b.size));
  for (int t = 0; t < b.decode_steps(); ++t) {
    local = m.style_step(g, local, control.local);
    out.style.push_back(m.style_log_probs(g, local));
    for (int r = 0; r < b.size; ++r) inputs[static_cast<std::size_t>(r)] = b.input_at(r, t);
    auto step = m.decode_step(g, response, inputs, Model<S>::control_state(local, control.global), enc, drop);
    response = step.state;
    out.log_probs.push_back(step.log_probs);
  }
  return out;
}

template <typename S>
EncoderOutput<S> encode_context(Graph<S>& g, const Model<S>& m, const Batch& b, const Dropout<S>& drop) {
  return m.encode(g, b.context_ids, b.size, b.context_width, b.context_lengths, drop);
}

template <typename S>
EncoderOutput<S> encode_response(Graph<S>& g, const Model<S>& m, const Batch& b, const Dropout<S>& drop) {
  std::vector<int> lengths(b.response_lengths);
  std::vector<int> ids(b.response_ids);
  int width = b.response_width;
  if (width == 0) {
    width = 1;
    ids.assign(static_cast<std::size_t>(b.size), corpus::Vocabulary::kUnk);
  }
  for (auto& l : lengths) l = std::max(l, 1);
  return m.encode(g, ids, b.size, width, lengths, drop);
}

template <typename S>
struct MlForward {
  Expr<S> total;
  LossBreakdown values;
};

// L_ml = L_nll + α·L_style + β·L_cbow + γ·(λ1·L_acc + λ2·L_kl).
// Per example, the decoder sees gold attributes with probability
// gold_attribute_prob and otherwise a Gumbel-softmax sample from the prior.
template <typename S>
MlForward<S> ml_objective(Graph<S>& g, const Model<S>& m, const Batch& b, const TrainingConfig& cfg, long step,
                          std::mt19937_64& rng, bool dropout = true) {
  const auto& mc = m.config();
  Dropout<S> drop{dropout ? &rng : nullptr, mc.keep_prob};
  const auto enc_x = encode_context(g, m, b, drop);
  const auto enc_y = encode_response(g, m, b, drop);
  const auto prior = m.prior(g, enc_x.final);
  const auto posterior = m.posterior(g, enc_x.final, enc_y.final);

  std::bernoulli_distribution use_gold(cfg.gold_attribute_prob);
  Matrix<S> gold_mask(b.size, 1);
  bool any_predicted = false;
  for (int r = 0; r < b.size; ++r) {
    const bool gold = use_gold(rng);
    gold_mask(r, 0) = gold ? S(1) : S(0);
    any_predicted = any_predicted || !gold;
  }
  std::array<Expr<S>, attr::kAttributeCount> gold_weights, decoder_weights;
  Expr<S> keep_gold = g.constant(gold_mask);
  Expr<S> keep_sample = g.constant((Matrix<S>::Ones(b.size, 1) - gold_mask).eval());
  for (auto a : attr::kAllAttributes) {
    const auto j = attr::index_of(a);
    std::vector<int> col;
    for (const auto& v : b.attributes) col.push_back(v[a]);
    gold_weights[j] = g.constant(model::one_hot<S>(col, attr::arity_of(a)));
    decoder_weights[j] = gold_weights[j];
    if (any_predicted) {
      Expr<S> relaxed = model::gumbel_softmax(prior[j], mc.gumbel_tau, rng);
      decoder_weights[j] = nn::mul_col(gold_weights[j], keep_gold) + nn::mul_col(relaxed, keep_sample);
    }
  }
  const auto control = m.embed(g, decoder_weights);
  const auto gold_control = m.embed(g, gold_weights);

  const auto tf = teacher_force(g, m, b, enc_x, control, drop);
  const Expr<S> nll = nll_loss(g, std::span<const Expr<S>>(tf.log_probs), word_targets(b));
  const Expr<S> style = local_style_loss(
      g, std::span<const std::array<Expr<S>, 2>>(tf.style), style_targets(b),
      {mc.is_enabled(attr::Attribute::specificity), mc.is_enabled(attr::Attribute::relatedness)});
  const Expr<S> bow = cbow_loss(g, m.bow_log_probs(g, enc_x.final, gold_control.all), gold_tokens(b));
  const auto attrs = attribute_losses(g, prior, posterior, b.attributes, mc.enabled);

  const LossWeights w = cfg.weights_at(step);
  Expr<S> total = nll + nn::affine(style, static_cast<S>(w.alpha)) + nn::affine(bow, static_cast<S>(w.beta)) +
                  nn::affine(attrs.acc, static_cast<S>(w.gamma * w.lambda1)) +
                  nn::affine(attrs.kl, static_cast<S>(w.gamma * w.lambda2));
  MlForward<S> out;
  out.total = total;
  out.values.nll = static_cast<double>(nll.scalar());
  out.values.l_style = static_cast<double>(style.scalar());
  out.values.c_bow = static_cast<double>(bow.scalar());
  out.values.acc = static_cast<double>(attrs.acc.scalar());
  out.values.kl = static_cast<double>(attrs.kl.scalar());
  out.values.total = static_cast<double>(total.scalar());
  return out;
}

enum class AttributeSource { oracle, system };

struct NllTotals {
  double nll = 0.0;
  double tokens = 0.0;
};

// Summed teacher-forced NLL over target tokens (including </s>), with gold
// attributes (oracle) or prior-argmax attributes (system).
template <typename S>
NllTotals teacher_forced_nll(const Model<S>& m, const Batch& b, AttributeSource source) {
  Graph<S> g;
  g.set_track_gradients(false);
  const Dropout<S> none;
  const auto enc = encode_context(g, m, b, none);
  std::vector<attr::AttributeVector> attrs = b.attributes;
  if (source == AttributeSource::system) {
    const auto prior = m.prior(g, enc.final);
    for (int r = 0; r < b.size; ++r) attrs[static_cast<std::size_t>(r)] = model::argmax_attributes(model::row_probabilities(prior, r));
  }
  const auto control = m.embed(g, attrs);
  const auto tf = teacher_force(g, m, b, enc, control, none);
  NllTotals out;
  for (int t = 0; t < b.decode_steps(); ++t) {
    const auto& lp = tf.log_probs[static_cast<std::size_t>(t)].value();
    for (int r = 0; r < b.size; ++r) {
      if (b.target_mask(r, t) == 0.0) continue;
      out.nll -= static_cast<double>(lp(r, b.target_at(r, t)));
      out.tokens += 1.0;
    }
  }
  return out;
}

struct RlStats {
  double reward_mean = 0.0;  // sampled sequences
  double baseline_reward_mean = 0.0;
  std::array<double, attr::kAttributeCount> per_attribute_reward_means{};
  double rl_loss = 0.0;
  double nll = 0.0;
  double total = 0.0;
};

template <typename S>
struct RlForward {
  Expr<S> total;
  RlStats stats;
};

// Teacher-forced L_nll with gold attributes and training-mode dropout.
template <typename S>
Expr<S> nll_objective(Graph<S>& g, const Model<S>& m, const Batch& b, std::mt19937_64& rng) {
  Dropout<S> drop{&rng, m.config().keep_prob};
  const auto enc = encode_context(g, m, b, drop);
  const auto control = m.embed(g, b.attributes);
  const auto tf = teacher_force(g, m, b, enc, control, drop);
  return nll_loss(g, std::span<const Expr<S>>(tf.log_probs), word_targets(b));
}

// η·L_rl + (1 − η)·L_nll with gold attributes as the reward targets. The
// NLL pass draws its dropout masks first, so with η = 0 the objective is
// exactly nll_objective under the same generator state. Sampled and greedy
// sequences are decoded without dropout.
template <typename S>
RlForward<S> rl_objective(Graph<S>& g, const Model<S>& m, const Batch& b, const std::vector<corpus::AnnotatedExample>& examples,
                          const corpus::Vocabulary& vocab, const TrainingConfig& cfg, const RewardConfig& reward_cfg,
                          const attr::AnnotationResources& resources, std::mt19937_64& rng) {
  const Expr<S> nll = nll_objective(g, m, b, rng);

  const Dropout<S> none;
  model::GenerateOptions sample_opt{true, 1.0, cfg.max_generation_length};
  model::GenerateOptions greedy_opt{false, 1.0, cfg.max_generation_length};
  const auto enc = encode_context(g, m, b, none);
  const auto control = m.embed(g, b.attributes);
  model::SampleTrace<S> trace;
  const auto sampled = model::decode(g, m, enc, control, sample_opt, &rng, &trace);

  const bool tracking = g.track_gradients();
  g.set_track_gradients(false);
  const auto greedy = model::decode(g, m, enc, control, greedy_opt);
  g.set_track_gradients(tracking);

  RlStats stats;
  std::vector<double> advantage(static_cast<std::size_t>(b.size));
  for (int r = 0; r < b.size; ++r) {
    const auto& ex = examples.at(b.source_index[static_cast<std::size_t>(r)]);
    const auto& last = ex.dialogue.last_utterance();
    const auto rs = attribute_consistency_reward(vocab.decode(sampled.ids[static_cast<std::size_t>(r)]), last,
                                                 ex.attributes, reward_cfg, resources);
    const auto rg = attribute_consistency_reward(vocab.decode(greedy.ids[static_cast<std::size_t>(r)]), last,
                                                 ex.attributes, reward_cfg, resources);
    advantage[static_cast<std::size_t>(r)] = rs.total - rg.total;
    stats.reward_mean += rs.total / b.size;
    stats.baseline_reward_mean += rg.total / b.size;
    for (std::size_t j = 0; j < attr::kAttributeCount; ++j) stats.per_attribute_reward_means[j] += rs.per_attribute[j] / b.size;
  }
  const Expr<S> rl = self_critical_loss(g, std::span<const Expr<S>>(trace.log_probs), trace.chosen, trace.active, advantage);

  const S eta = static_cast<S>(cfg.rl_weight);
  RlForward<S> out;
  out.total = nn::affine(rl, eta) + nn::affine(nll, S(1) - eta);
  stats.rl_loss = static_cast<double>(rl.scalar());
  stats.nll = static_cast<double>(nll.scalar());
  stats.total = static_cast<double>(out.total.scalar());
  out.stats = stats;
  return out;
}

}  // namespace crayon::train
