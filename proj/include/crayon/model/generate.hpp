#pragma once

#include "crayon/corpus/batch.hpp"
#include "crayon/corpus/vocabulary.hpp"
#include "crayon/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace crayon::model {

using corpus::Vocabulary;

struct ContextBatch {
  int size = 0;
  int width = 0;
  std::vector<int> ids;
  std::vector<int> lengths;

  static ContextBatch from_sequences(const std::vector<std::vector<int>>& seqs) {
    ContextBatch c;
    c.size = static_cast<int>(seqs.size());
    for (const auto& s : seqs) c.width = std::max(c.width, std::max<int>(1, static_cast<int>(s.size())));
    c.ids.assign(static_cast<std::size_t>(c.size * c.width), Vocabulary::kPad);
    for (int b = 0; b < c.size; ++b) {
      const auto& s = seqs[static_cast<std::size_t>(b)];
      if (s.empty()) {
        c.ids[static_cast<std::size_t>(b * c.width)] = Vocabulary::kUnk;
        c.lengths.push_back(1);
        continue;
      }
      std::copy(s.begin(), s.end(), c.ids.begin() + b * c.width);
      c.lengths.push_back(static_cast<int>(s.size()));
    }
    return c;
  }

  static ContextBatch from_batch(const corpus::Batch& b) {
    return {b.size, b.context_width, b.context_ids, b.context_lengths};
  }
};

struct GenerateOptions {
  bool sample = false;
  double temperature = 1.0;
  int max_len = 40;

  void validate() const {
    if (max_len < 1) throw std::invalid_argument("generate: max_len must be at least 1");
    if (sample && !(temperature > 0.0)) throw std::invalid_argument("generate: temperature must be positive");
  }
};

// Per-step log-probabilities and choices of a sampled decode, kept on the
// graph so a sequence-level loss can be formed once rewards are known.
template <typename S>
struct SampleTrace {
  std::vector<Expr<S>> log_probs;
  std::vector<std::vector<int>> chosen;
  std::vector<std::vector<S>> active;  // 1 while the row was still generating
};

struct DecodedBatch {
  std::vector<std::vector<int>> ids;                         // without </s>
  std::vector<std::vector<std::array<int, 2>>> token_styles;  // argmax local bins per emitted token
};

namespace detail {

template <typename S>
int choose_token(const Matrix<S>& log_probs, Eigen::Index row, const GenerateOptions& opt, std::mt19937_64* rng) {
  const Eigen::Index v = log_probs.cols();
  auto allowed = [](Eigen::Index i) { return i != Vocabulary::kPad && i != Vocabulary::kBos; };
  if (!opt.sample) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < v; ++i) {
      if (allowed(i) && (best < 0 || log_probs(row, i) > log_probs(row, best))) best = i;
    }
    return static_cast<int>(best);
  }
  if (rng == nullptr) throw std::invalid_argument("generate: sampling needs a random generator");
  std::vector<double> w(static_cast<std::size_t>(v), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v; ++i) {
    if (allowed(i)) mx = std::max(mx, static_cast<double>(log_probs(row, i)) / opt.temperature);
  }
  for (Eigen::Index i = 0; i < v; ++i) {
    if (allowed(i)) w[static_cast<std::size_t>(i)] = std::exp(static_cast<double>(log_probs(row, i)) / opt.temperature - mx);
  }
  std::discrete_distribution<int> dist(w.begin(), w.end());
  return dist(*rng);
}

template <typename S>
int argmax_row(const Matrix<S>& m, Eigen::Index row) {
  Eigen::Index best = 0;
  m.row(row).maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace detail

// Autoregressive decode until </s> or max_len for every row.
template <typename S>
DecodedBatch decode(Graph<S>& g, const Model<S>& m, const EncoderOutput<S>& enc, const ControlVectors<S>& control,
                    const GenerateOptions& opt, std::mt19937_64* rng = nullptr, SampleTrace<S>* trace = nullptr) {
  opt.validate();
  const int batch = static_cast<int>(enc.lengths.size());
  DecodedBatch out;
  out.ids.resize(static_cast<std::size_t>(batch));
  out.token_styles.resize(static_cast<std::size_t>(batch));
  const Dropout<S> none;
  Expr<S> local = m.style_initial(g, enc.final);
  Expr<S> response = m.response_initial(g, enc.final);
  std::vector<int> previous(static_cast<std::size_t>(batch), Vocabulary::kBos);
  std::vector<bool> done(static_cast<std::size_t>(batch), false);
  for (int t = 0; t < opt.max_len; ++t) {
    local = m.style_step(g, local, control.local);
    const auto style = m.style_log_probs(g, local);
    const auto step = m.decode_step(g, response, previous, Model<S>::control_state(local, control.global), enc, none);
    response = step.state;
    std::vector<int> chosen(static_cast<std::size_t>(batch), Vocabulary::kEos);
    std::vector<S> active(static_cast<std::size_t>(batch), S(0));
    for (int b = 0; b < batch; ++b) {
      if (done[static_cast<std::size_t>(b)]) continue;
      const int tok = detail::choose_token(step.log_probs.value(), b, opt, rng);
      chosen[static_cast<std::size_t>(b)] = tok;
      active[static_cast<std::size_t>(b)] = S(1);
      if (tok == Vocabulary::kEos) {
        done[static_cast<std::size_t>(b)] = true;
      } else {
        out.ids[static_cast<std::size_t>(b)].push_back(tok);
        out.token_styles[static_cast<std::size_t>(b)].push_back(
            {detail::argmax_row(style[0].value(), b), detail::argmax_row(style[1].value(), b)});
      }
    }
    if (trace != nullptr) {
      trace->log_probs.push_back(step.log_probs);
      trace->chosen.push_back(chosen);
      trace->active.push_back(active);
    }
    previous = chosen;
    if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) break;
  }
  return out;
}

inline attr::AttributeVector argmax_attributes(const std::array<std::vector<double>, kAttributeCount>& probs) {
  attr::AttributeVector v;
  for (std::size_t j = 0; j < kAttributeCount; ++j) {
    v.values[j] = static_cast<int>(std::max_element(probs[j].begin(), probs[j].end()) - probs[j].begin());
  }
  return v;
}

// Supplied values win; every missing one takes the prior's most likely value.
inline attr::AttributeVector resolve_attributes(const attr::PartialAttributes& given,
                                                const std::array<std::vector<double>, kAttributeCount>& prior) {
  attr::AttributeVector v = argmax_attributes(prior);
  for (std::size_t j = 0; j < kAttributeCount; ++j) {
    if (given[j]) {
      if (*given[j] < 0 || *given[j] >= attr::kArity[j]) throw std::invalid_argument("attribute value out of range");
      v.values[j] = *given[j];
    }
  }
  return v;
}

struct GenerationResult {
  Tokens tokens;
  std::vector<int> ids;
  attr::AttributeVector used;
  std::array<std::vector<double>, kAttributeCount> prior;
  std::vector<std::array<int, 2>> token_styles;
};

template <typename S>
std::array<std::vector<double>, kAttributeCount> row_probabilities(const Distributions<S>& d, Eigen::Index row) {
  std::array<std::vector<double>, kAttributeCount> p;
  for (std::size_t j = 0; j < kAttributeCount; ++j) {
    const auto& lp = d[j].value();
    for (Eigen::Index c = 0; c < lp.cols(); ++c) p[j].push_back(std::exp(static_cast<double>(lp(row, c))));
  }
  return p;
}

// Prior distributions for each context, without decoding.
template <typename S>
std::vector<std::array<std::vector<double>, kAttributeCount>> predict_prior(const Model<S>& m, const ContextBatch& ctx) {
  Graph<S> g;
  g.set_track_gradients(false);
  const auto enc = m.encode(g, ctx.ids, ctx.size, ctx.width, ctx.lengths, Dropout<S>{});
  const auto prior = m.prior(g, enc.final);
  std::vector<std::array<std::vector<double>, kAttributeCount>> out;
  for (int b = 0; b < ctx.size; ++b) out.push_back(row_probabilities(prior, b));
  return out;
}

// Fills missing attributes from the prior, then decodes. Sampling draws
// from a generator seeded with `seed`.
template <typename S>
std::vector<GenerationResult> generate(const Model<S>& m, const Vocabulary& vocab, const ContextBatch& ctx,
                                       const std::vector<attr::PartialAttributes>& attributes,
                                       const GenerateOptions& opt, std::uint64_t seed = 0) {
  opt.validate();
  if (static_cast<int>(attributes.size()) != ctx.size) throw std::invalid_argument("generate: one attribute set per context");
  Graph<S> g;
  g.set_track_gradients(false);
  const auto enc = m.encode(g, ctx.ids, ctx.size, ctx.width, ctx.lengths, Dropout<S>{});
  const auto prior = m.prior(g, enc.final);
  std::vector<GenerationResult> results(static_cast<std::size_t>(ctx.size));
  std::vector<attr::AttributeVector> used;
  for (int b = 0; b < ctx.size; ++b) {
    auto& r = results[static_cast<std::size_t>(b)];
    r.prior = row_probabilities(prior, b);
    r.used = resolve_attributes(attributes[static_cast<std::size_t>(b)], r.prior);
    used.push_back(r.used);
  }
  const auto control = m.embed(g, used);
  std::mt19937_64 rng(seed);
  const auto decoded = decode(g, m, enc, control, opt, &rng);
  for (int b = 0; b < ctx.size; ++b) {
    auto& r = results[static_cast<std::size_t>(b)];
    r.ids = decoded.ids[static_cast<std::size_t>(b)];
    r.tokens = vocab.decode(r.ids);
    r.token_styles = decoded.token_styles[static_cast<std::size_t>(b)];
  }
  return results;
}

template <typename S>
std::vector<GenerationResult> generate(const Model<S>& m, const Vocabulary& vocab, const std::vector<Tokens>& contexts,
                                       const std::vector<attr::PartialAttributes>& attributes,
                                       const GenerateOptions& opt, std::uint64_t seed = 0) {
  std::vector<std::vector<int>> seqs;
  for (const auto& c : contexts) {
    seqs.push_back(vocab.encode(c));
    auto& s = seqs.back();
    if (s.size() > corpus::kMaxContextTokens) s.erase(s.begin(), s.end() - static_cast<std::ptrdiff_t>(corpus::kMaxContextTokens));
  }
  return generate(m, vocab, ContextBatch::from_sequences(seqs), attributes, opt, seed);
}

}  // namespace crayon::model
