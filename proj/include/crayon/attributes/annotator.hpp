#pragma once

// Composes the per-attribute extractors into one annotation pass, and
// fits the corpus-dependent pieces (NIDF table, bin cut-points) on a
// training split.

#include "crayon/attributes/nidf.hpp"
#include "crayon/attributes/schema.hpp"
#include "crayon/attributes/sentiment.hpp"
#include "crayon/attributes/word_vectors.hpp"
#include "crayon/io.hpp"
#include "crayon/text.hpp"

#include <array>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace crayon::attr {

inline const std::set<std::string>& question_keywords() {
  static const std::set<std::string> words = {"how", "what", "when", "where", "which",
                                              "who", "whom", "whose", "why", "?"};
  return words;
}

inline bool detect_question(const Tokens& tokens) {
  const auto& kw = question_keywords();
  for (const auto& t : tokens) {
    std::string lower;
    lower.reserve(t.size());
    for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (kw.count(lower)) return true;
  }
  return false;
}

inline double relatedness_score(const Tokens& response, const Tokens& last_utterance, const WordVectorTable& vectors) {
  return cosine(vectors.mean(response), vectors.mean(last_utterance));
}

inline int response_relatedness_bin(double score, const AttributeSchema& schema) {
  return bucketize(score, schema[Attribute::relatedness].response_bin_boundaries);
}

inline double token_relatedness_score(const std::string& word, const Eigen::VectorXd& utterance_mean,
                                      const WordVectorTable& vectors) {
  const auto* v = vectors.find(word);
  return v ? cosine(*v, utterance_mean) : 0.0;
}

inline int token_relatedness_bin(const std::string& word, const Tokens& last_utterance, const WordVectorTable& vectors,
                                 const AttributeSchema& schema) {
  const double s = token_relatedness_score(word, vectors.mean(last_utterance), vectors);
  return bucketize(s, schema[Attribute::relatedness].token_bin_boundaries);
}

inline int length_bin(const Tokens& tokens, const AttributeSchema& schema) {
  return bucketize(static_cast<double>(tokens.size()), schema[Attribute::length].response_bin_boundaries);
}

inline int response_specificity_bin(const Tokens& tokens, const NidfTable& table, const AttributeSchema& schema) {
  return bucketize(mean_nidf(tokens, table), schema[Attribute::specificity].response_bin_boundaries);
}

struct AnnotationResources {
  AttributeSchema schema = AttributeSchema::standard();
  NidfTable nidf;
  SentimentLexicon lexicon;
  WordVectorTable vectors;
};

struct Annotation {
  AttributeVector attributes;
  TokenStyleLabels labels;
};

// Attribute vector of a response; `last_utterance` is the final history turn.
inline AttributeVector annotate_response(const Tokens& response, const Tokens& last_utterance,
                                         const AnnotationResources& res) {
  if (response.empty()) throw std::invalid_argument("annotate: empty response");
  AttributeVector v;
  v[Attribute::specificity] = response_specificity_bin(response, res.nidf, res.schema);
  v[Attribute::sentiment] = static_cast<int>(classify_sentiment(response, res.lexicon));
  v[Attribute::relatedness] =
      response_relatedness_bin(relatedness_score(response, last_utterance, res.vectors), res.schema);
  v[Attribute::question_asking] = detect_question(response) ? 1 : 0;
  v[Attribute::length] = length_bin(response, res.schema);
  return v;
}

inline TokenStyleLabels token_labels(const Tokens& response, const Tokens& last_utterance,
                                     const AnnotationResources& res) {
  TokenStyleLabels out;
  const Eigen::VectorXd ctx = res.vectors.mean(last_utterance);
  const auto& rel_cuts = res.schema[Attribute::relatedness].token_bin_boundaries;
  for (const auto& w : response) {
    out.rows[0].push_back(token_specificity_bin(w, res.nidf));
    out.rows[1].push_back(bucketize(token_relatedness_score(w, ctx, res.vectors), rel_cuts));
  }
  return out;
}

inline Annotation annotate_example(const Tokens& response, const Tokens& last_utterance,
                                   const AnnotationResources& res) {
  return {annotate_response(response, last_utterance, res), token_labels(response, last_utterance, res)};
}

// A (last utterance, response) pair used when fitting resources.
struct ResponseWithContext {
  Tokens last_utterance;
  Tokens response;
};

// Fits NIDF scores and every cut-point on a training split.
inline AnnotationResources fit_resources(const std::vector<ResponseWithContext>& train, SentimentLexicon lexicon,
                                         WordVectorTable vectors) {
  if (train.empty()) throw std::invalid_argument("fit_resources: empty training split");
  AnnotationResources res;
  res.lexicon = std::move(lexicon);
  res.vectors = std::move(vectors);
  std::vector<Tokens> responses;
  responses.reserve(train.size());
  for (const auto& ex : train) responses.push_back(ex.response);
  res.nidf = build_nidf_table(responses);

  std::vector<double> spec, rel, len, token_rel;
  for (const auto& ex : train) {
    spec.push_back(mean_nidf(ex.response, res.nidf));
    rel.push_back(relatedness_score(ex.response, ex.last_utterance, res.vectors));
    len.push_back(static_cast<double>(ex.response.size()));
    const Eigen::VectorXd ctx = res.vectors.mean(ex.last_utterance);
    for (const auto& w : ex.response) token_rel.push_back(token_relatedness_score(w, ctx, res.vectors));
  }
  res.schema[Attribute::specificity].response_bin_boundaries = fit_bin_boundaries(spec, 3);
  res.schema[Attribute::relatedness].response_bin_boundaries = fit_bin_boundaries(rel, 3);
  res.schema[Attribute::length].response_bin_boundaries = fit_bin_boundaries(len, 3);
  res.schema[Attribute::relatedness].token_bin_boundaries = fit_bin_boundaries(token_rel, kTokenBins);
  res.schema.validate();
  return res;
}

inline nlohmann::json to_json(const AnnotationResources& r) {
  nlohmann::json j = to_json(r.nidf);
  nlohmann::json bounds = nlohmann::json::object();
  for (Attribute a : kAllAttributes) bounds[std::string(name_of(a))] = r.schema[a].response_bin_boundaries;
  bounds["token_relatedness"] = r.schema[Attribute::relatedness].token_bin_boundaries;
  j["boundaries"] = std::move(bounds);
  j["attributes"] = to_json(r.schema);
  j["lexicon"] = to_json(r.lexicon);
  j["vectors"] = to_json(r.vectors);
  return j;
}

inline AnnotationResources resources_from_json(const nlohmann::json& j) {
  AnnotationResources r;
  r.nidf = nidf_from_json(j);
  r.schema = schema_from_json(j.at("attributes"));
  r.lexicon = lexicon_from_json(j.at("lexicon"));
  r.vectors = word_vectors_from_json(j.at("vectors"));
  r.schema.validate();
  return r;
}

inline void save_resources(const AnnotationResources& r, const std::filesystem::path& path) {
  write_file(path, to_json(r).dump(1) + "\n");
}

inline AnnotationResources load_resources(const std::filesystem::path& path) {
  const std::string body = read_file(path);
  try {
    return resources_from_json(nlohmann::json::parse(body));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace crayon::attr
