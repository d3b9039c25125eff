#pragma once

#include "crayon/attributes/annotator.hpp"
#include "crayon/io.hpp"
#include "crayon/text.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace crayon::corpus {

enum class CorpusFormat { persona_chat, daily_dialog };

inline CorpusFormat format_from_name(const std::string& s) {
  if (s == "persona_chat") return CorpusFormat::persona_chat;
  if (s == "daily_dialog") return CorpusFormat::daily_dialog;
  throw ConfigError("unknown corpus format '" + s + "' (expected persona_chat or daily_dialog)");
}

inline constexpr std::size_t kMaxContextTokens = 256;
inline constexpr std::size_t kMinResponseTokens = 3;

struct DialogueExample {
  std::vector<Tokens> persona;
  std::vector<Tokens> history;
  Tokens response;

  const Tokens& last_utterance() const { return history.back(); }

  // Persona sentences then history turns, keeping the most recent tokens.
  Tokens context_tokens(std::size_t max_tokens = kMaxContextTokens) const {
    Tokens all;
    for (const auto& s : persona) all.insert(all.end(), s.begin(), s.end());
    for (const auto& u : history) all.insert(all.end(), u.begin(), u.end());
    if (all.size() > max_tokens) all.erase(all.begin(), all.end() - static_cast<std::ptrdiff_t>(max_tokens));
    return all;
  }
};

struct AnnotatedExample {
  DialogueExample dialogue;
  attr::AttributeVector attributes;
  attr::TokenStyleLabels labels;
};

namespace detail {

inline std::vector<Tokens> tokenize_all(const nlohmann::json& arr) {
  std::vector<Tokens> out;
  for (const auto& s : arr) out.push_back(tokenize(s.get<std::string>()));
  return out;
}

inline nlohmann::json join_all(const std::vector<Tokens>& seqs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : seqs) arr.push_back(join(s));
  return arr;
}

}  // namespace detail

// One dialogue per line: {"persona": [...], "history": [...], "response": "..."}.
// The dialogue's turns are history followed by response; every turn after
// the first becomes a response once, with all earlier turns as history.
inline std::vector<DialogueExample> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::vector<DialogueExample> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<Tokens> persona;
    std::vector<Tokens> turns;
    try {
      const auto j = nlohmann::json::parse(line);
      if (format == CorpusFormat::persona_chat && j.contains("persona")) persona = detail::tokenize_all(j["persona"]);
      turns = detail::tokenize_all(j.at("history"));
      turns.push_back(tokenize(j.at("response").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string(), lineno, e.what());
    }
    for (std::size_t t = 1; t < turns.size(); ++t) {
      DialogueExample ex;
      ex.persona = persona;
      ex.history.assign(turns.begin(), turns.begin() + static_cast<std::ptrdiff_t>(t));
      ex.response = turns[t];
      out.push_back(std::move(ex));
    }
  }
  return out;
}

inline std::vector<DialogueExample> filter_short(std::vector<DialogueExample> examples) {
  std::erase_if(examples, [](const DialogueExample& e) { return e.response.size() < kMinResponseTokens; });
  return examples;
}

inline std::vector<attr::ResponseWithContext> response_pairs(const std::vector<DialogueExample>& examples) {
  std::vector<attr::ResponseWithContext> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back({e.last_utterance(), e.response});
  return out;
}

inline AnnotatedExample annotate(const DialogueExample& ex, const attr::AnnotationResources& res) {
  auto a = attr::annotate_example(ex.response, ex.last_utterance(), res);
  return {ex, a.attributes, std::move(a.labels)};
}

inline std::vector<AnnotatedExample> annotate_all(const std::vector<DialogueExample>& examples,
                                                  const attr::AnnotationResources& res) {
  std::vector<AnnotatedExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(annotate(e, res));
  return out;
}

inline nlohmann::json to_json(const AnnotatedExample& e) {
  nlohmann::json j;
  j["persona"] = detail::join_all(e.dialogue.persona);
  j["history"] = detail::join_all(e.dialogue.history);
  j["response"] = join(e.dialogue.response);
  j["attributes"] = attr::to_json(e.attributes);
  j["token_labels"] = {{"specificity", e.labels.rows[0]}, {"relatedness", e.labels.rows[1]}};
  return j;
}

inline AnnotatedExample annotated_from_json(const nlohmann::json& j) {
  AnnotatedExample e;
  e.dialogue.persona = detail::tokenize_all(j.value("persona", nlohmann::json::array()));
  e.dialogue.history = detail::tokenize_all(j.at("history"));
  e.dialogue.response = tokenize(j.at("response").get<std::string>());
  e.attributes = attr::attributes_from_json(j.at("attributes"));
  e.labels.rows[0] = j.at("token_labels").at("specificity").get<std::vector<int>>();
  e.labels.rows[1] = j.at("token_labels").at("relatedness").get<std::vector<int>>();
  if (e.dialogue.history.empty()) throw std::invalid_argument("empty history");
  if (e.labels.rows[0].size() != e.dialogue.response.size() || e.labels.rows[1].size() != e.dialogue.response.size()) {
    throw std::invalid_argument("token_labels width differs from response length");
  }
  for (const auto& row : e.labels.rows) {
    for (int v : row) {
      if (v < 0 || v >= attr::kTokenBins) throw std::invalid_argument("token label out of range");
    }
  }
  return e;
}

inline void save_annotated(const std::vector<AnnotatedExample>& examples, const std::filesystem::path& path) {
  std::string body;
  for (const auto& e : examples) body += to_json(e).dump() + "\n";
  write_file(path, body);
}

// One example per line; records are not re-expanded into turn pairs.
inline std::vector<AnnotatedExample> load_annotated(const std::filesystem::path& path) {
  std::vector<AnnotatedExample> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(annotated_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError(path.string(), lineno, e.what());
    }
  }
  return out;
}

}  // namespace crayon::corpus
