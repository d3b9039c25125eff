#pragma once

#include "crayon/attributes/schema.hpp"
#include "crayon/io.hpp"
#include "crayon/text.hpp"

#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace crayon::attr {

struct SentimentLexicon {
  std::set<std::string> positive;
  std::set<std::string> negative;
  std::set<std::string> negation;

  void validate() const {
    for (const auto& w : positive) {
      if (negative.count(w)) throw std::invalid_argument("lexicon: '" + w + "' is both positive and negative");
    }
  }
};

inline constexpr int kNegationWindow = 2;

// Lexicon polarity count; a hit with a negation word among the two
// preceding tokens counts with flipped sign.
inline Sentiment classify_sentiment(const Tokens& tokens, const SentimentLexicon& lex) {
  int score = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    int polarity = 0;
    if (lex.positive.count(tokens[t])) polarity = 1;
    else if (lex.negative.count(tokens[t])) polarity = -1;
    if (polarity == 0) continue;
    for (std::size_t back = 1; back <= kNegationWindow && back <= t; ++back) {
      if (lex.negation.count(tokens[t - back])) {
        polarity = -polarity;
        break;
      }
    }
    score += polarity;
  }
  if (score > 0) return Sentiment::positive;
  if (score < 0) return Sentiment::negative;
  return Sentiment::neutral;
}

// Reads positive.txt, negative.txt and negation.txt (one word per line).
inline SentimentLexicon load_lexicon(const std::filesystem::path& dir) {
  SentimentLexicon lex;
  auto read = [&](const char* file, std::set<std::string>& into) {
    for (const auto& line : read_lines(dir / file)) {
      auto toks = tokenize(line);
      if (toks.size() == 1) into.insert(toks[0]);
    }
  };
  read("positive.txt", lex.positive);
  read("negative.txt", lex.negative);
  read("negation.txt", lex.negation);
  lex.validate();
  return lex;
}

inline void save_lexicon(const SentimentLexicon& lex, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* file, const std::set<std::string>& words) {
    std::string body;
    for (const auto& w : words) body += w + "\n";
    write_file(dir / file, body);
  };
  write("positive.txt", lex.positive);
  write("negative.txt", lex.negative);
  write("negation.txt", lex.negation);
}

inline nlohmann::json to_json(const SentimentLexicon& lex) {
  return {{"positive", lex.positive}, {"negative", lex.negative}, {"negation", lex.negation}};
}

inline SentimentLexicon lexicon_from_json(const nlohmann::json& j) {
  SentimentLexicon lex;
  lex.positive = j.at("positive").get<std::set<std::string>>();
  lex.negative = j.at("negative").get<std::set<std::string>>();
  lex.negation = j.at("negation").get<std::set<std::string>>();
  lex.validate();
  return lex;
}

}  // namespace crayon::attr
