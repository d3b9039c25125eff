#pragma once

#include "crayon/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace crayon::attr {

// Normalized inverse response frequency: IDF(w) = log(R / c_w), min-max
// scaled to [0, 1] across the response corpus.
struct NidfTable {
  std::size_t response_count = 0;          // R
  std::map<std::string, std::size_t> doc_freq;  // c_w
  std::map<std::string, double> scores;
  double min_idf = 0.0;
  double max_idf = 0.0;

  static constexpr double kOutOfVocabulary = 1.0;

  double score(const std::string& word) const {
    auto it = scores.find(word);
    return it == scores.end() ? kOutOfVocabulary : it->second;
  }
};

inline NidfTable build_nidf_table(const std::vector<Tokens>& responses) {
  if (responses.empty()) throw std::invalid_argument("build_nidf_table: empty corpus");
  NidfTable t;
  t.response_count = responses.size();
  for (const auto& r : responses) {
    if (r.empty()) throw std::invalid_argument("build_nidf_table: empty response");
    std::set<std::string> seen(r.begin(), r.end());
    for (const auto& w : seen) ++t.doc_freq[w];
  }
  const double R = static_cast<double>(t.response_count);
  t.min_idf = std::numeric_limits<double>::infinity();
  t.max_idf = -std::numeric_limits<double>::infinity();
  std::map<std::string, double> idf;
  for (const auto& [w, c] : t.doc_freq) {
    const double v = std::log(R / static_cast<double>(c));
    idf[w] = v;
    t.min_idf = std::min(t.min_idf, v);
    t.max_idf = std::max(t.max_idf, v);
  }
  const double range = t.max_idf - t.min_idf;
  for (const auto& [w, v] : idf) {
    // All words share one frequency: the range is empty and every score is 0.
    t.scores[w] = range > 0.0 ? (v - t.min_idf) / range : 0.0;
  }
  return t;
}

inline int token_specificity_bin(const std::string& word, const NidfTable& table) {
  const double s = table.score(word);
  return std::min(static_cast<int>(std::floor(s * 6.0)), 5);
}

inline double mean_nidf(const Tokens& tokens, const NidfTable& table) {
  if (tokens.empty()) throw std::invalid_argument("mean_nidf: empty token list");
  double sum = 0.0;
  for (const auto& w : tokens) sum += table.score(w);
  return sum / static_cast<double>(tokens.size());
}

inline nlohmann::json to_json(const NidfTable& t) {
  return {{"R", t.response_count}, {"min_idf", t.min_idf}, {"max_idf", t.max_idf}, {"scores", t.scores},
          {"doc_freq", t.doc_freq}};
}

inline NidfTable nidf_from_json(const nlohmann::json& j) {
  NidfTable t;
  t.response_count = j.at("R").get<std::size_t>();
  t.min_idf = j.at("min_idf").get<double>();
  t.max_idf = j.at("max_idf").get<double>();
  t.scores = j.at("scores").get<std::map<std::string, double>>();
  if (j.contains("doc_freq")) t.doc_freq = j["doc_freq"].get<std::map<std::string, std::size_t>>();
  return t;
}

}  // namespace crayon::attr
