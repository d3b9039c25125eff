#pragma once

#include "crayon/corpus/dialogue.hpp"
#include "crayon/corpus/vocabulary.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace crayon::corpus {

// Padded, id-encoded view of a group of annotated examples. Decoding runs
// for response_width + 1 steps: step t reads token t−1 (or <s>) and
// predicts token t (or </s> right after the last real token).
struct Batch {
  int size = 0;

  int context_width = 0;
  std::vector<int> context_ids;  // size x context_width, row-major
  std::vector<int> context_lengths;

  int response_width = 0;
  std::vector<int> response_ids;  // size x response_width
  std::vector<int> response_lengths;

  std::vector<attr::AttributeVector> attributes;
  // [b][k][t] flattened: size x 2 x response_width, -1 on padding.
  std::vector<int> token_labels;
  std::vector<std::size_t> source_index;

  int decode_steps() const { return response_width + 1; }

  int context_id(int b, int t) const { return context_ids[static_cast<std::size_t>(b * context_width + t)]; }
  int response_id(int b, int t) const { return response_ids[static_cast<std::size_t>(b * response_width + t)]; }
  int label(int b, int k, int t) const {
    return token_labels[static_cast<std::size_t>((b * 2 + k) * response_width + t)];
  }

  // Decoder input at step t for example b.
  int input_at(int b, int t) const { return t == 0 ? Vocabulary::kBos : response_id(b, t - 1); }

  // Target at step t, or kPad past the end-of-sequence step.
  int target_at(int b, int t) const {
    const int len = response_lengths[static_cast<std::size_t>(b)];
    if (t < len) return response_id(b, t);
    if (t == len) return Vocabulary::kEos;
    return Vocabulary::kPad;
  }

  // 1 for steps that carry a word-generation target (tokens and </s>).
  double target_mask(int b, int t) const { return t <= response_lengths[static_cast<std::size_t>(b)] ? 1.0 : 0.0; }

  // 1 for steps aligned to a real response token.
  double token_mask(int b, int t) const { return t < response_lengths[static_cast<std::size_t>(b)] ? 1.0 : 0.0; }
};

inline Batch make_batch(const std::vector<AnnotatedExample>& examples, const std::vector<std::size_t>& indices,
                        const Vocabulary& vocab) {
  Batch b;
  b.size = static_cast<int>(indices.size());
  std::vector<std::vector<int>> ctx, resp;
  for (std::size_t i : indices) {
    const auto& e = examples.at(i);
    ctx.push_back(vocab.encode(e.dialogue.context_tokens()));
    if (ctx.back().empty()) ctx.back().push_back(Vocabulary::kUnk);
    resp.push_back(vocab.encode(e.dialogue.response));
    b.context_width = std::max(b.context_width, static_cast<int>(ctx.back().size()));
    b.response_width = std::max(b.response_width, static_cast<int>(resp.back().size()));
  }
  b.context_ids.assign(static_cast<std::size_t>(b.size * b.context_width), Vocabulary::kPad);
  b.response_ids.assign(static_cast<std::size_t>(b.size * b.response_width), Vocabulary::kPad);
  b.token_labels.assign(static_cast<std::size_t>(b.size * 2 * b.response_width), -1);
  for (int r = 0; r < b.size; ++r) {
    const auto& e = examples.at(indices[static_cast<std::size_t>(r)]);
    std::copy(ctx[r].begin(), ctx[r].end(), b.context_ids.begin() + r * b.context_width);
    std::copy(resp[r].begin(), resp[r].end(), b.response_ids.begin() + r * b.response_width);
    b.context_lengths.push_back(static_cast<int>(ctx[r].size()));
    b.response_lengths.push_back(static_cast<int>(resp[r].size()));
    b.attributes.push_back(e.attributes);
    for (int k = 0; k < 2; ++k) {
      const auto& row = e.labels.rows[static_cast<std::size_t>(k)];
      for (std::size_t t = 0; t < row.size(); ++t) {
        b.token_labels[static_cast<std::size_t>((r * 2 + k) * b.response_width) + t] = row[t];
      }
    }
    b.source_index.push_back(indices[static_cast<std::size_t>(r)]);
  }
  return b;
}

// Shuffles example order with `seed` (no shuffle when seed is 0), then
// groups consecutive examples into batches of at most batch_size.
inline std::vector<Batch> make_batches(const std::vector<AnnotatedExample>& examples, const Vocabulary& vocab,
                                       std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch size must be positive");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(make_batch(examples, idx, vocab));
  }
  return out;
}

}  // namespace crayon::corpus
