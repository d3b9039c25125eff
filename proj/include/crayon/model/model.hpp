#pragma once

// Context encoder, attribute predictor, multi-grained style specification
// layer and response generation layer. The model only exposes building
// blocks over a Graph; the training objective and the decoding loops
// compose them.

#include "crayon/attributes/schema.hpp"
#include "crayon/model/config.hpp"
#include "crayon/nn/graph.hpp"
#include "crayon/nn/layers.hpp"
#include "crayon/nn/ops.hpp"

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace crayon::model {

using attr::Attribute;
using attr::kAttributeCount;
using nn::Expr;
using nn::Graph;
using nn::Matrix;

// Inverted dropout; without a generator it is the identity.
template <typename S>
struct Dropout {
  std::mt19937_64* rng = nullptr;
  double keep = 1.0;

  Expr<S> operator()(Expr<S> x) const {
    if (rng == nullptr || keep >= 1.0) return x;
    std::bernoulli_distribution coin(keep);
    Matrix<S> mask(x.rows(), x.cols());
    const S scale = S(1) / static_cast<S>(keep);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = coin(*rng) ? scale : S(0);
    return nn::cmul(x, x.graph->constant(std::move(mask)));
  }
};

template <typename S>
Matrix<S> one_hot(std::span<const int> values, int arity) {
  Matrix<S> m = Matrix<S>::Zero(static_cast<Eigen::Index>(values.size()), arity);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), values[i]) = S(1);
  return m;
}

template <typename S>
struct EncoderOutput {
  Expr<S> memory;  // B x (positions · encoder_hidden)
  Expr<S> final;   // state at each row's last real position
  int positions = 0;
  std::vector<int> lengths;
  Matrix<S> score_mask;  // 0 on real positions, large negative on padding
};

template <typename S>
struct ControlVectors {
  Expr<S> local;   // [specificity; relatedness]
  Expr<S> global;  // [sentiment; length; question_asking]
  Expr<S> all;     // all five in schema order
};

template <typename S>
struct DecodeStep {
  Expr<S> state;
  Expr<S> context;
  Expr<S> attention;
  Expr<S> log_probs;
};

template <typename S>
using Distributions = std::array<Expr<S>, kAttributeCount>;  // row-wise log-probabilities

template <typename S>
class Model {
 public:
  explicit Model(ModelConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed);
    const S init = static_cast<S>(cfg_.init_range);
    const int dir = cfg_.encoder_direction_hidden();
    const int enc = cfg_.encoder_hidden;
    const int dec = cfg_.decoder_hidden;
    const int ad = cfg_.attr_dim;

    word_embedding_ = &store_.add("word_embedding", cfg_.vocab_size, cfg_.word_dim, init, rng);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      const int in = l == 0 ? cfg_.word_dim : enc;
      const std::string p = "encoder.l" + std::to_string(l);
      encoder_.push_back({nn::GruCell<S>(store_, p + ".fwd", in, dir, init, rng),
                          nn::GruCell<S>(store_, p + ".bwd", in, dir, init, rng)});
    }
    for (Attribute a : attr::kAllAttributes) {
      const auto j = attr::index_of(a);
      const std::string n(attr::name_of(a));
      prior_[j] = nn::Mlp<S>(store_, "prior." + n, enc, cfg_.predictor_hidden, attr::arity_of(a), init, rng);
      posterior_[j] = nn::Mlp<S>(store_, "posterior." + n, 2 * enc, cfg_.predictor_hidden, attr::arity_of(a), init, rng);
      attr_embedding_[j] = &store_.add("attr_embedding." + n, attr::arity_of(a), ad, init, rng);
    }
    style_init_ = nn::Linear<S>(store_, "style.init", enc, dec, init, rng);
    style_gate_ = nn::Mlp<S>(store_, "style.gate", dec + 2 * ad, cfg_.style_mlp_hidden, 2 * ad, init, rng);
    style_cell_ = nn::GruCell<S>(store_, "style.gru", 2 * ad, dec, init, rng);
    for (std::size_t k = 0; k < attr::kLocalAttributeCount; ++k) {
      style_heads_[k] = nn::Linear<S>(store_, "style.head." + std::string(attr::name_of(attr::kLocalAttributes[k])), dec,
                                      attr::kTokenBins, init, rng);
    }
    response_init_ = nn::Linear<S>(store_, "response.init", enc, dec, init, rng);
    input_word_ = nn::Linear<S>(store_, "response.input_word", cfg_.word_dim, dec, init, rng);
    input_control_ = nn::Linear<S>(store_, "response.input_control", dec + 3 * ad, dec, init, rng, false);
    response_cell_ = nn::GruCell<S>(store_, "response.gru", dec, dec, init, rng);
    attention_ = &store_.add("response.attention", dec, enc, init, rng);
    output_ = nn::Linear<S>(store_, "response.output", dec + enc, cfg_.vocab_size, init, rng);
    bow_ = nn::Mlp<S>(store_, "bow", enc + 5 * ad, cfg_.bow_hidden, cfg_.vocab_size, init, rng);
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore<S>& parameters() { return store_; }
  const nn::ParameterStore<S>& parameters() const { return store_; }

  // Bidirectional multi-layer GRU over `ids` (batch x width, row-major,
  // padded). Padding never updates a recurrent state, so real positions
  // match an unpadded encoding of the same sequence.
  EncoderOutput<S> encode(Graph<S>& g, std::span<const int> ids, int batch, int width, std::span<const int> lengths,
                          const Dropout<S>& drop) const {
    if (static_cast<int>(ids.size()) != batch * width || static_cast<int>(lengths.size()) != batch) {
      throw std::invalid_argument("encode: id matrix shape mismatch");
    }
    EncoderOutput<S> out;
    out.positions = width;
    out.lengths.assign(lengths.begin(), lengths.end());
    out.score_mask = Matrix<S>::Zero(batch, width);

    Expr<S> table = g.param(*word_embedding_);
    std::vector<Expr<S>> inputs;
    std::vector<Expr<S>> keep, carry;
    std::vector<bool> full(static_cast<std::size_t>(width), true);
    std::vector<int> col(static_cast<std::size_t>(batch));
    for (int t = 0; t < width; ++t) {
      Matrix<S> m(batch, 1);
      for (int b = 0; b < batch; ++b) {
        col[static_cast<std::size_t>(b)] = ids[static_cast<std::size_t>(b * width + t)];
        const bool real = t < lengths[static_cast<std::size_t>(b)];
        m(b, 0) = real ? S(1) : S(0);
        if (!real) {
          full[static_cast<std::size_t>(t)] = false;
          out.score_mask(b, t) = S(-1e9);
        }
      }
      keep.push_back(g.constant(m));
      carry.push_back(g.constant((Matrix<S>::Ones(batch, 1) - m).eval()));
      inputs.push_back(drop(nn::lookup(table, std::span<const int>(col))));
    }
    for (int b = 0; b < batch; ++b) {
      if (lengths[static_cast<std::size_t>(b)] < 1 || lengths[static_cast<std::size_t>(b)] > width) {
        throw std::invalid_argument("encode: lengths must lie in [1, width]");
      }
    }

    const int dir = cfg_.encoder_direction_hidden();
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      std::vector<Expr<S>> fwd(static_cast<std::size_t>(width)), bwd(static_cast<std::size_t>(width));
      auto step = [&](const nn::GruCell<S>& cell, Expr<S> h, int t) {
        Expr<S> next = cell(g, inputs[static_cast<std::size_t>(t)], h);
        if (full[static_cast<std::size_t>(t)]) return next;
        return nn::mul_col(next, keep[static_cast<std::size_t>(t)]) + nn::mul_col(h, carry[static_cast<std::size_t>(t)]);
      };
      Expr<S> h = g.constant(Matrix<S>::Zero(batch, dir));
      for (int t = 0; t < width; ++t) fwd[static_cast<std::size_t>(t)] = h = step(encoder_[l][0], h, t);
      h = g.constant(Matrix<S>::Zero(batch, dir));
      for (int t = width - 1; t >= 0; --t) bwd[static_cast<std::size_t>(t)] = h = step(encoder_[l][1], h, t);
      for (int t = 0; t < width; ++t) {
        Expr<S> o = nn::concat_cols({fwd[static_cast<std::size_t>(t)], bwd[static_cast<std::size_t>(t)]});
        inputs[static_cast<std::size_t>(t)] = l + 1 < encoder_.size() ? drop(o) : o;
      }
    }
    out.memory = nn::concat_cols(std::span<const Expr<S>>(inputs));
    std::vector<int> last(lengths.begin(), lengths.end());
    for (auto& v : last) v -= 1;
    out.final = nn::select_block(out.memory, std::span<const int>(last), width);
    return out;
  }

  Distributions<S> prior(Graph<S>& g, Expr<S> context_final) const {
    Distributions<S> d;
    for (std::size_t j = 0; j < kAttributeCount; ++j) d[j] = nn::log_softmax(prior_[j](g, context_final));
    return d;
  }

  Distributions<S> posterior(Graph<S>& g, Expr<S> context_final, Expr<S> response_final) const {
    Expr<S> joint = nn::concat_cols({context_final, response_final});
    Distributions<S> d;
    for (std::size_t j = 0; j < kAttributeCount; ++j) d[j] = nn::log_softmax(posterior_[j](g, joint));
    return d;
  }

  // `weights[j]` holds a B x arity row-stochastic matrix per attribute:
  // one-hot for given values, a relaxed sample otherwise. Each embedding
  // is the weight-averaged row mixture; disabled attributes embed to 0.
  ControlVectors<S> embed(Graph<S>& g, const std::array<Expr<S>, kAttributeCount>& weights) const {
    std::array<Expr<S>, kAttributeCount> e;
    for (Attribute a : attr::kAllAttributes) {
      const auto j = attr::index_of(a);
      if (cfg_.is_enabled(a)) {
        e[j] = nn::matmul(weights[j], g.param(*attr_embedding_[j]));
      } else {
        e[j] = g.constant(Matrix<S>::Zero(weights[j].rows(), cfg_.attr_dim));
      }
    }
    auto at = [&](Attribute a) { return e[attr::index_of(a)]; };
    ControlVectors<S> c;
    c.local = nn::concat_cols({at(Attribute::specificity), at(Attribute::relatedness)});
    c.global = nn::concat_cols({at(Attribute::sentiment), at(Attribute::length), at(Attribute::question_asking)});
    c.all = nn::concat_cols(std::span<const Expr<S>>(e));
    return c;
  }

  ControlVectors<S> embed(Graph<S>& g, const std::vector<attr::AttributeVector>& values) const {
    std::array<Expr<S>, kAttributeCount> w;
    for (Attribute a : attr::kAllAttributes) {
      std::vector<int> col;
      for (const auto& v : values) col.push_back(v[a]);
      w[attr::index_of(a)] = g.constant(one_hot<S>(col, attr::arity_of(a)));
    }
    return embed(g, w);
  }

  Expr<S> style_initial(Graph<S>& g, Expr<S> context_final) const { return style_init_(g, context_final); }

  // h_t = GRU(h_{t−1}, k_t) with k_t = e_local ⊙ σ(MLP([h_{t−1}; e_local])).
  Expr<S> style_step(Graph<S>& g, Expr<S> previous, Expr<S> local) const {
    Expr<S> gate = nn::sigmoid(style_gate_(g, nn::concat_cols({previous, local})));
    return style_cell_(g, nn::cmul(local, gate), previous);
  }

  // The gated input k_t alone, for inspection.
  Expr<S> style_gated_input(Graph<S>& g, Expr<S> previous, Expr<S> local) const {
    return nn::cmul(local, nn::sigmoid(style_gate_(g, nn::concat_cols({previous, local}))));
  }

  std::array<Expr<S>, attr::kLocalAttributeCount> style_log_probs(Graph<S>& g, Expr<S> local_state) const {
    return {nn::log_softmax(style_heads_[0](g, local_state)), nn::log_softmax(style_heads_[1](g, local_state))};
  }

  static Expr<S> control_state(Expr<S> local_state, Expr<S> global) { return nn::concat_cols({local_state, global}); }

  Expr<S> response_initial(Graph<S>& g, Expr<S> context_final) const { return response_init_(g, context_final); }

  DecodeStep<S> decode_step(Graph<S>& g, Expr<S> previous, std::span<const int> previous_tokens, Expr<S> control,
                            const EncoderOutput<S>& enc, const Dropout<S>& drop) const {
    Expr<S> y = drop(nn::lookup(g.param(*word_embedding_), previous_tokens));
    Expr<S> input = nn::tanh(input_word_(g, y) + input_control_(g, control));
    DecodeStep<S> s;
    s.state = response_cell_(g, input, previous);
    Expr<S> query = nn::matmul(s.state, g.param(*attention_));
    Expr<S> scores = nn::block_dot(query, enc.memory, enc.positions) + g.constant(enc.score_mask);
    s.attention = nn::softmax(scores);
    s.context = nn::block_weighted_sum(s.attention, enc.memory, enc.positions);
    s.log_probs = nn::log_softmax(output_(g, nn::concat_cols({s.state, s.context})));
    return s;
  }

  // Order-free word distribution from the context summary and all attribute embeddings.
  Expr<S> bow_log_probs(Graph<S>& g, Expr<S> context_final, Expr<S> all_attributes) const {
    return nn::log_softmax(bow_(g, nn::concat_cols({context_final, all_attributes})));
  }

 private:
  ModelConfig cfg_;
  nn::ParameterStore<S> store_;
  nn::Parameter<S>* word_embedding_ = nullptr;
  std::vector<std::array<nn::GruCell<S>, 2>> encoder_;
  std::array<nn::Mlp<S>, kAttributeCount> prior_;
  std::array<nn::Mlp<S>, kAttributeCount> posterior_;
  std::array<nn::Parameter<S>*, kAttributeCount> attr_embedding_{};
  nn::Linear<S> style_init_;
  nn::Mlp<S> style_gate_;
  nn::GruCell<S> style_cell_;
  std::array<nn::Linear<S>, attr::kLocalAttributeCount> style_heads_;
  nn::Linear<S> response_init_;
  nn::Linear<S> input_word_;
  nn::Linear<S> input_control_;
  nn::GruCell<S> response_cell_;
  nn::Parameter<S>* attention_ = nullptr;
  nn::Linear<S> output_;
  nn::Mlp<S> bow_;
};

}  // namespace crayon::model
