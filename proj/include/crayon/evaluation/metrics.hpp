#pragma once

#include "crayon/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

namespace crayon::eval {

inline double perplexity_from_totals(double total_nll, double token_count) {
  if (token_count <= 0.0) throw std::invalid_argument("perplexity: no tokens");
  return std::exp(total_nll / token_count);
}

inline std::map<Tokens, int> ngram_counts(const Tokens& t, int n) {
  std::map<Tokens, int> out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= t.size(); ++i) {
    ++out[Tokens(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  }
  return out;
}

// Corpus-level BLEU-n (uniform weights over orders 1..n) with one
// reference per hypothesis and the standard brevity penalty. A zero
// precision at order ≥ 2 is smoothed to 1 / (count + 1); no unigram
// overlap at all scores 0.
inline double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, int n) {
  if (hypotheses.size() != references.size()) throw std::invalid_argument("bleu: hypothesis/reference count mismatch");
  if (n < 1) throw std::invalid_argument("bleu: order must be >= 1");
  std::vector<double> matched(static_cast<std::size_t>(n), 0.0), total(static_cast<std::size_t>(n), 0.0);
  double hyp_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += static_cast<double>(hypotheses[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (int k = 1; k <= n; ++k) {
      const auto hc = ngram_counts(hypotheses[i], k);
      const auto rc = ngram_counts(references[i], k);
      for (const auto& [g, c] : hc) {
        auto it = rc.find(g);
        matched[static_cast<std::size_t>(k - 1)] += it == rc.end() ? 0 : std::min(c, it->second);
        total[static_cast<std::size_t>(k - 1)] += c;
      }
    }
  }
  if (hyp_len == 0.0 || matched[0] == 0.0) return 0.0;
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    double m = matched[static_cast<std::size_t>(k)], t = total[static_cast<std::size_t>(k)];
    if (m == 0.0) {
      m += 1.0;
      t += 1.0;
    }
    log_sum += std::log(m / t);
  }
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return 100.0 * bp * std::exp(log_sum / n);
}

// Unique n-grams over all n-grams, pooled across every hypothesis.
inline double distinct(const std::vector<Tokens>& hypotheses, int n) {
  if (n < 1) throw std::invalid_argument("distinct: order must be >= 1");
  std::set<Tokens> unique;
  double count = 0.0;
  for (const auto& h : hypotheses) {
    for (const auto& [g, c] : ngram_counts(h, n)) {
      unique.insert(g);
      count += c;
    }
  }
  return count == 0.0 ? 0.0 : static_cast<double>(unique.size()) / count;
}

}  // namespace crayon::eval
