#pragma once

// Shared fixtures: tiny hand-built corpora, the synthetic corpus pipeline
// and a finite-difference gradient checker.

#include "crayon/attributes/annotator.hpp"
#include "crayon/corpus/batch.hpp"
#include "crayon/corpus/dialogue.hpp"
#include "crayon/corpus/synthetic.hpp"
#include "crayon/corpus/vocabulary.hpp"
#include "crayon/model/model.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace crayon::testkit {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("crayon_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

struct World {
  std::vector<corpus::AnnotatedExample> train, valid, test;
  corpus::Vocabulary vocab;
  attr::AnnotationResources res;
};

// Writes the synthetic corpus to `dir` and runs it through the same
// load / filter / fit / annotate path the command line uses.
inline World synth_world(const corpus::SynthConfig& cfg, const std::filesystem::path& dir) {
  corpus::write_synthetic_corpus(corpus::make_synthetic_corpus(cfg), dir);
  auto load = [&](const char* f) {
    return corpus::filter_short(corpus::load_corpus(dir / f, corpus::CorpusFormat::daily_dialog));
  };
  const auto tr = load("train.jsonl");
  const auto va = load("valid.jsonl");
  const auto te = load("test.jsonl");
  World w;
  w.res = attr::fit_resources(corpus::response_pairs(tr), attr::load_lexicon(dir / "lexicon"),
                              attr::load_word_vectors(dir / "vectors.txt"));
  w.train = corpus::annotate_all(tr, w.res);
  w.valid = corpus::annotate_all(va, w.res);
  w.test = corpus::annotate_all(te, w.res);
  w.vocab = corpus::build_vocabulary(w.train);
  return w;
}

// Vocabulary of the reserved ids plus w4 .. w{size-1}.
inline corpus::Vocabulary numbered_vocab(int size) {
  std::vector<std::string> words{"<pad>", "<unk>", "<s>", "</s>"};
  for (int i = 4; i < size; ++i) words.push_back("w" + std::to_string(i));
  return corpus::Vocabulary(std::move(words));
}

// Random annotated examples over numbered_vocab(vocab_size).
inline std::vector<corpus::AnnotatedExample> random_examples(int n, int vocab_size, int context_len, int response_len,
                                                             std::uint64_t seed, bool ragged = false) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> word(4, vocab_size - 1), bin(0, attr::kTokenBins - 1);
  std::vector<corpus::AnnotatedExample> out;
  for (int i = 0; i < n; ++i) {
    corpus::AnnotatedExample e;
    const int cl = ragged ? 1 + static_cast<int>(rng() % static_cast<unsigned>(context_len)) : context_len;
    const int rl = ragged ? 3 + static_cast<int>(rng() % static_cast<unsigned>(std::max(1, response_len - 2))) : response_len;
    Tokens ctx, resp;
    for (int t = 0; t < cl; ++t) ctx.push_back("w" + std::to_string(word(rng)));
    for (int t = 0; t < rl; ++t) resp.push_back("w" + std::to_string(word(rng)));
    e.dialogue.history = {ctx};
    e.dialogue.response = resp;
    for (auto a : attr::kAllAttributes) e.attributes[a] = static_cast<int>(rng() % static_cast<unsigned>(attr::arity_of(a)));
    for (auto& row : e.labels.rows) {
      for (int t = 0; t < rl; ++t) row.push_back(bin(rng));
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline model::ModelConfig tiny_model_config(int vocab_size, int hidden = 8, int attr_dim = 8) {
  model::ModelConfig c;
  c.vocab_size = vocab_size;
  c.word_dim = hidden;
  c.encoder_layers = 1;
  c.encoder_hidden = hidden;
  c.decoder_hidden = hidden;
  c.attr_dim = attr_dim;
  c.style_mlp_hidden = hidden;
  c.predictor_hidden = hidden;
  c.bow_hidden = hidden;
  c.keep_prob = 1.0;
  c.init_range = 0.3;
  return c;
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst = 0.0;
  std::string worst_name;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / scale;
}

// Compares backward() against central differences on `samples` scalars
// drawn uniformly from every parameter entry. `loss` must rebuild its
// graph deterministically on each call.
inline GradCheck check_gradients(nn::ParameterStore<double>& store,
                                 const std::function<nn::Expr<double>(nn::Graph<double>&)>& loss, std::size_t samples,
                                 double tolerance, std::uint64_t seed, double eps = 1e-5) {
  store.zero_grad();
  {
    nn::Graph<double> g;
    g.backward(loss(g));
  }
  std::vector<std::pair<nn::Parameter<double>*, Eigen::Index>> all;
  for (auto& p : store.all()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) all.emplace_back(&p, i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  if (all.size() > samples) all.resize(samples);

  auto value = [&] {
    nn::Graph<double> g;
    g.set_track_gradients(false);
    return loss(g).scalar();
  };
  GradCheck r;
  for (auto [p, i] : all) {
    double& x = p->value.data()[i];
    const double saved = x;
    x = saved + eps;
    const double up = value();
    x = saved - eps;
    const double down = value();
    x = saved;
    const double numeric = (up - down) / (2 * eps);
    const double analytic = p->grad.size() == 0 ? 0.0 : p->grad.data()[i];
    const double err = relative_error(analytic, numeric);
    ++r.checked;
    if (!(err <= tolerance)) ++r.failed;
    if (!(err <= r.worst)) {
      r.worst = err;
      r.worst_name = p->name + "[" + std::to_string(i) + "]";
    }
  }
  return r;
}

}  // namespace crayon::testkit
