#pragma once

#include "crayon/corpus/dialogue.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace crayon::corpus {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReserved = 4;

  Vocabulary() : words_{"<pad>", "<unk>", "<s>", "</s>"} { reindex(); }

  explicit Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.size() < kReserved || words_[kPad] != "<pad>" || words_[kUnk] != "<unk>" || words_[kBos] != "<s>" ||
        words_[kEos] != "</s>") {
      throw std::invalid_argument("vocabulary: reserved entries missing");
    }
    reindex();
    if (index_.size() != words_.size()) throw std::invalid_argument("vocabulary: duplicate entries");
  }

  int size() const { return static_cast<int>(words_.size()); }

  int id(const std::string& w) const {
    auto it = index_.find(w);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& w) const { return index_.count(w) > 0; }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& words() const { return words_; }

  std::vector<int> encode(const Tokens& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
  }

  Tokens decode(const std::vector<int>& ids) const {
    Tokens out;
    for (int i : ids) out.push_back(word(i));
    return out;
  }

 private:
  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<int>(i));
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Tokens from contexts and responses with frequency >= min_count, ordered
// by descending frequency then lexicographically.
inline Vocabulary build_vocabulary(const std::vector<AnnotatedExample>& examples, std::size_t min_count = 2) {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : examples) {
    for (const auto& t : e.dialogue.context_tokens()) ++counts[t];
    for (const auto& t : e.dialogue.response) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words{"<pad>", "<unk>", "<s>", "</s>"};
  for (auto& [w, c] : kept) {
    if (w == "<pad>" || w == "<unk>" || w == "<s>" || w == "</s>") continue;
    words.push_back(w);
  }
  return Vocabulary(std::move(words));
}

inline nlohmann::json to_json(const Vocabulary& v) { return v.words(); }
inline Vocabulary vocabulary_from_json(const nlohmann::json& j) { return Vocabulary(j.get<std::vector<std::string>>()); }

}  // namespace crayon::corpus
