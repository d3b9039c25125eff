#pragma once

// Synthetic controllable corpus. Every response is assembled from the
// attribute values it is meant to carry:
//   question_asking  a wh-word opener and a closing "?" (else a closing ".")
//   sentiment        one positive or negative lexicon word, or none
//   length           total token count drawn from 4-6, 9-11 or 14-16
//   specificity      content words from a topic's common, mid or rare pool
//   relatedness      content words from the context's topic, another topic,
//                    or alternating between the two
// Only topic words carry vectors, so relatedness reflects topic overlap.

#include "crayon/attributes/sentiment.hpp"
#include "crayon/io.hpp"
#include "crayon/text.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace crayon::corpus {

struct SynthConfig {
  std::uint64_t seed = 7;
  int train = 2000;
  int valid = 200;
  int test = 200;
  int topics = 8;
  int vector_dim = 32;
  int common_words = 4;   // per topic
  int mid_words = 16;
  int rare_words = 100;
  double vector_noise = 0.5;
};

// The intended attribute values behind one generated response.
struct SynthIntent {
  int specificity = 0;
  int sentiment = 1;
  int relatedness = 0;
  int question = 0;
  int length = 0;
};

struct SynthRecord {
  Tokens context;
  Tokens response;
  SynthIntent intent;
};

struct SynthCorpus {
  std::vector<SynthRecord> train, valid, test;
  std::vector<std::pair<std::string, std::vector<double>>> vectors;
  attr::SentimentLexicon lexicon;
};

namespace detail {

class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : gen_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::size_t>(hi - lo + 1))); }
  double unit() { return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0); }
  double symmetric() { return 2.0 * unit() - 1.0; }
  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

inline const std::vector<std::string>& synth_positive() {
  static const std::vector<std::string> w{"great", "wonderful", "happy", "lovely", "amazing", "awesome", "nice"};
  return w;
}

inline const std::vector<std::string>& synth_negative() {
  static const std::vector<std::string> w{"terrible", "awful", "sad", "horrible", "boring", "bad", "nasty"};
  return w;
}

inline const std::vector<std::string>& synth_negation() {
  static const std::vector<std::string> w{"not", "no", "never", "don't", "isn't", "can't", "won't"};
  return w;
}

inline const std::vector<std::string>& synth_openers() {
  static const std::vector<std::string> w{"what", "how", "why"};
  return w;
}

// Pronounceable pseudo-words, unique across the whole corpus.
inline std::string make_word(SynthRng& rng, std::set<std::string>& used) {
  static const char* onset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "tr"};
  static const char* vowel[] = {"a", "e", "i", "o", "u"};
  for (;;) {
    std::string w;
    const int syllables = rng.between(2, 3);
    for (int s = 0; s < syllables; ++s) {
      w += onset[rng.below(std::size(onset))];
      w += vowel[rng.below(std::size(vowel))];
    }
    if (rng.below(2) == 0) w += onset[rng.below(11)];
    if (used.insert(w).second) return w;
  }
}

struct Topic {
  std::vector<std::string> common, mid, rare;
};

}  // namespace detail

inline SynthCorpus make_synthetic_corpus(const SynthConfig& cfg) {
  if (cfg.topics < 2 || cfg.train < 3 || cfg.valid < 0 || cfg.test < 0 || cfg.vector_dim < 2 || cfg.common_words < 1 ||
      cfg.mid_words < 3 || cfg.rare_words < 1) {
    throw ConfigError("synth: invalid corpus configuration");
  }
  detail::SynthRng rng(cfg.seed);
  SynthCorpus out;
  for (const auto& w : detail::synth_positive()) out.lexicon.positive.insert(w);
  for (const auto& w : detail::synth_negative()) out.lexicon.negative.insert(w);
  for (const auto& w : detail::synth_negation()) out.lexicon.negation.insert(w);

  std::set<std::string> used{"?", ".", "what", "how", "why", "when", "where", "which", "who", "whom", "whose",
                             "tell", "me", "about", "i", "was", "thinking", "of", "lately", "the", "and"};
  for (const auto* list : {&detail::synth_positive(), &detail::synth_negative(), &detail::synth_negation()}) {
    used.insert(list->begin(), list->end());
  }

  std::vector<detail::Topic> topics(static_cast<std::size_t>(cfg.topics));
  for (auto& t : topics) {
    std::vector<double> base(static_cast<std::size_t>(cfg.vector_dim));
    for (auto& x : base) x = rng.symmetric();
    auto fill = [&](std::vector<std::string>& pool, int n) {
      for (int i = 0; i < n; ++i) {
        pool.push_back(detail::make_word(rng, used));
        std::vector<double> v(base);
        for (auto& x : v) x += cfg.vector_noise * rng.symmetric();
        out.vectors.emplace_back(pool.back(), std::move(v));
      }
    };
    fill(t.common, cfg.common_words);
    fill(t.mid, cfg.mid_words);
    fill(t.rare, cfg.rare_words);
  }

  // Balanced attribute columns, shuffled independently per split.
  auto balanced = [&](int n, int arity) {
    std::vector<int> col(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = i % arity;
    rng.shuffle(col);
    return col;
  };

  auto make_split = [&](int n) {
    std::vector<SynthRecord> records;
    const auto spec = balanced(n, 3), sent = balanced(n, 3), rel = balanced(n, 3), qa = balanced(n, 2),
               len = balanced(n, 3);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      SynthRecord r;
      r.intent = {spec[k], sent[k], rel[k], qa[k], len[k]};
      const std::size_t here = rng.below(topics.size());
      std::size_t other = rng.below(topics.size() - 1);
      if (other >= here) ++other;

      static const std::vector<std::vector<std::string>> openers{
          {"tell", "me", "about"}, {"i", "was", "thinking", "of"}, {"the"}};
      r.context = rng.pick(openers);
      const int ctx_words = rng.between(3, 4);
      for (int w = 0; w < ctx_words; ++w) {
        if (w > 0 && rng.below(3) == 0) r.context.push_back("and");
        r.context.push_back(rng.pick(topics[here].mid));
      }
      if (rng.below(2) == 0) r.context.push_back("lately");

      static const int lo[] = {4, 9, 14};
      const int total = rng.between(lo[r.intent.length], lo[r.intent.length] + 2);
      if (r.intent.question) r.response.push_back(rng.pick(detail::synth_openers()));
      if (r.intent.sentiment == 0) r.response.push_back(rng.pick(detail::synth_negative()));
      if (r.intent.sentiment == 2) r.response.push_back(rng.pick(detail::synth_positive()));
      const int content = total - static_cast<int>(r.response.size()) - 1;
      for (int w = 0; w < content; ++w) {
        std::size_t topic = here;
        if (r.intent.relatedness == 0 || (r.intent.relatedness == 1 && w % 2 == 1)) topic = other;
        const auto& t = topics[topic];
        const auto& pool = r.intent.specificity == 0 ? t.common : r.intent.specificity == 1 ? t.mid : t.rare;
        r.response.push_back(rng.pick(pool));
      }
      r.response.push_back(r.intent.question ? "?" : ".");
      records.push_back(std::move(r));
    }
    return records;
  };
  out.train = make_split(cfg.train);
  out.valid = make_split(cfg.valid);
  out.test = make_split(cfg.test);
  return out;
}

inline std::string synth_jsonl(const std::vector<SynthRecord>& records) {
  std::string body;
  for (const auto& r : records) {
    nlohmann::json j{{"persona", nlohmann::json::array()}, {"history", {join(r.context)}}, {"response", join(r.response)}};
    body += j.dump() + "\n";
  }
  return body;
}

inline std::string synth_vectors_text(const SynthCorpus& c) {
  std::string body;
  char buf[32];
  for (const auto& [w, v] : c.vectors) {
    body += w;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, " %.5f", x);
      body += buf;
    }
    body += "\n";
  }
  return body;
}

// Writes train/valid/test JSONL, vectors.txt and lexicon/ under `dir`.
inline void write_synthetic_corpus(const SynthCorpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "train.jsonl", synth_jsonl(c.train));
  write_file(dir / "valid.jsonl", synth_jsonl(c.valid));
  write_file(dir / "test.jsonl", synth_jsonl(c.test));
  write_file(dir / "vectors.txt", synth_vectors_text(c));
  attr::save_lexicon(c.lexicon, dir / "lexicon");
}

}  // namespace crayon::corpus
