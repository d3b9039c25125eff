#pragma once

// The five control attributes, their arities, and the bucketing rules
// that turn continuous scores into discrete bins.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace crayon::attr {

enum class Attribute : int { specificity = 0, sentiment = 1, relatedness = 2, question_asking = 3, length = 4 };
enum class AttributeKind { global, local };

inline constexpr std::size_t kAttributeCount = 5;
inline constexpr std::size_t kLocalAttributeCount = 2;
inline constexpr int kTokenBins = 6;

inline constexpr std::array<Attribute, kAttributeCount> kAllAttributes = {
    Attribute::specificity, Attribute::sentiment, Attribute::relatedness, Attribute::question_asking,
    Attribute::length};

// Local attributes in label-row order, then global ones in embedding order.
inline constexpr std::array<Attribute, 2> kLocalAttributes = {Attribute::specificity, Attribute::relatedness};
inline constexpr std::array<Attribute, 3> kGlobalAttributes = {Attribute::sentiment, Attribute::length,
                                                               Attribute::question_asking};

inline constexpr std::array<int, kAttributeCount> kArity = {3, 3, 3, 2, 3};

constexpr std::size_t index_of(Attribute a) { return static_cast<std::size_t>(a); }
constexpr int arity_of(Attribute a) { return kArity[index_of(a)]; }

constexpr AttributeKind kind_of(Attribute a) {
  return (a == Attribute::specificity || a == Attribute::relatedness) ? AttributeKind::local : AttributeKind::global;
}

// Attributes scored by distance between ordered bins during reward computation.
constexpr bool is_continuous(Attribute a) {
  return a == Attribute::specificity || a == Attribute::relatedness || a == Attribute::length;
}

inline std::string_view name_of(Attribute a) {
  switch (a) {
    case Attribute::specificity: return "specificity";
    case Attribute::sentiment: return "sentiment";
    case Attribute::relatedness: return "relatedness";
    case Attribute::question_asking: return "question_asking";
    case Attribute::length: return "length";
  }
  return "?";
}

// Column headers used in control-accuracy tables.
inline std::string_view short_name_of(Attribute a) {
  switch (a) {
    case Attribute::specificity: return "Spe.";
    case Attribute::sentiment: return "Sent.";
    case Attribute::relatedness: return "Rel.";
    case Attribute::question_asking: return "Q-A";
    case Attribute::length: return "Len.";
  }
  return "?";
}

inline std::optional<Attribute> attribute_from_name(std::string_view name) {
  for (Attribute a : kAllAttributes) {
    if (name_of(a) == name) return a;
  }
  return std::nullopt;
}

inline std::vector<std::string> value_labels(Attribute a) {
  switch (a) {
    case Attribute::specificity:
    case Attribute::relatedness: return {"low", "medium", "high"};
    case Attribute::sentiment: return {"negative", "neutral", "positive"};
    case Attribute::question_asking: return {"false", "true"};
    case Attribute::length: return {"short", "medium", "long"};
  }
  return {};
}

enum class Sentiment : int { negative = 0, neutral = 1, positive = 2 };

struct AttributeVector {
  std::array<int, kAttributeCount> values{};

  int& operator[](Attribute a) { return values[index_of(a)]; }
  int operator[](Attribute a) const { return values[index_of(a)]; }
  friend bool operator==(const AttributeVector&, const AttributeVector&) = default;

  bool valid() const {
    for (Attribute a : kAllAttributes) {
      if ((*this)[a] < 0 || (*this)[a] >= arity_of(a)) return false;
    }
    return true;
  }
};

// A partially specified attribute vector; unset entries are resolved later.
using PartialAttributes = std::array<std::optional<int>, kAttributeCount>;

// Per-token bin labels, one row per local attribute (specificity, relatedness).
struct TokenStyleLabels {
  std::array<std::vector<int>, kLocalAttributeCount> rows;

  std::size_t width() const { return rows[0].size(); }
  friend bool operator==(const TokenStyleLabels&, const TokenStyleLabels&) = default;
};

// Bin index for a score given sorted cut-points. Intervals are closed on
// the right: a score equal to a cut-point falls into the lower bin, so
// collapsed cut-points send every tied score to bin 0.
inline int bucketize(double score, const std::vector<double>& boundaries) {
  int bin = 0;
  for (double b : boundaries) {
    if (score > b) ++bin;
  }
  return bin;
}

// Equal-frequency cut-points: the inverse-ECDF (i/k)-quantiles, i = 1..k−1.
inline std::vector<double> fit_bin_boundaries(std::vector<double> scores, int k) {
  if (k <= 0) throw std::invalid_argument("fit_bin_boundaries: bin count must be positive");
  if (scores.empty()) throw std::invalid_argument("fit_bin_boundaries: no scores");
  std::sort(scores.begin(), scores.end());
  const std::size_t n = scores.size();
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(k - 1));
  for (int i = 1; i < k; ++i) {
    // Smallest rank r with r/n >= i/k, computed in integers.
    std::size_t rank = (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k);
    rank = std::max<std::size_t>(rank, 1);
    cuts.push_back(scores[rank - 1]);
  }
  return cuts;
}

struct AttributeSpec {
  Attribute attribute;
  AttributeKind kind;
  int arity;
  std::vector<double> response_bin_boundaries;  // continuous attributes only
  int token_bin_count = 0;                      // local attributes only
  std::vector<double> token_bin_boundaries;     // fitted token-level cut-points, if any
};

struct AttributeSchema {
  std::array<AttributeSpec, kAttributeCount> specs;

  // Unfitted schema: correct kinds and arities, no cut-points yet.
  static AttributeSchema standard() {
    AttributeSchema s;
    for (Attribute a : kAllAttributes) {
      AttributeSpec spec{a, kind_of(a), arity_of(a), {}, kind_of(a) == AttributeKind::local ? kTokenBins : 0, {}};
      s.specs[index_of(a)] = std::move(spec);
    }
    return s;
  }

  const AttributeSpec& operator[](Attribute a) const { return specs[index_of(a)]; }
  AttributeSpec& operator[](Attribute a) { return specs[index_of(a)]; }

  void validate() const {
    for (Attribute a : kAllAttributes) {
      const auto& s = (*this)[a];
      if (s.attribute != a || s.arity != arity_of(a) || s.kind != kind_of(a)) {
        throw std::invalid_argument("schema: unexpected definition for " + std::string(name_of(a)));
      }
      const bool binned = a == Attribute::specificity || a == Attribute::relatedness || a == Attribute::length;
      if (binned && s.response_bin_boundaries.size() != static_cast<std::size_t>(s.arity - 1)) {
        throw std::invalid_argument("schema: " + std::string(name_of(a)) + " needs arity-1 boundaries");
      }
      if (!std::is_sorted(s.response_bin_boundaries.begin(), s.response_bin_boundaries.end())) {
        throw std::invalid_argument("schema: boundaries must be sorted");
      }
    }
    const auto& rel = (*this)[Attribute::relatedness].token_bin_boundaries;
    if (rel.size() != static_cast<std::size_t>(kTokenBins - 1)) {
      throw std::invalid_argument("schema: relatedness needs 5 token-level boundaries");
    }
  }
};

inline nlohmann::json to_json(const AttributeSchema& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& spec : s.specs) {
    nlohmann::json j;
    j["name"] = std::string(name_of(spec.attribute));
    j["kind"] = spec.kind == AttributeKind::local ? "local" : "global";
    j["arity"] = spec.arity;
    j["values"] = value_labels(spec.attribute);
    j["response_bin_boundaries"] = spec.response_bin_boundaries;
    if (spec.kind == AttributeKind::local) {
      j["token_bin_count"] = spec.token_bin_count;
      j["token_bin_boundaries"] = spec.token_bin_boundaries;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

inline AttributeSchema schema_from_json(const nlohmann::json& arr) {
  AttributeSchema s = AttributeSchema::standard();
  if (!arr.is_array() || arr.size() != kAttributeCount) throw std::invalid_argument("schema: expected 5 attributes");
  for (const auto& j : arr) {
    auto a = attribute_from_name(j.at("name").get<std::string>());
    if (!a) throw std::invalid_argument("schema: unknown attribute " + j.at("name").get<std::string>());
    auto& spec = s[*a];
    if (j.at("arity").get<int>() != spec.arity) throw std::invalid_argument("schema: arity mismatch");
    spec.response_bin_boundaries = j.at("response_bin_boundaries").get<std::vector<double>>();
    if (j.contains("token_bin_boundaries")) spec.token_bin_boundaries = j["token_bin_boundaries"].get<std::vector<double>>();
  }
  return s;
}

inline nlohmann::json to_json(const AttributeVector& v) {
  nlohmann::json j = nlohmann::json::object();
  for (Attribute a : kAllAttributes) j[std::string(name_of(a))] = v[a];
  return j;
}

inline AttributeVector attributes_from_json(const nlohmann::json& j) {
  AttributeVector v;
  for (Attribute a : kAllAttributes) v[a] = j.at(std::string(name_of(a))).get<int>();
  if (!v.valid()) throw std::invalid_argument("attribute value out of range");
  return v;
}

}  // namespace crayon::attr
