#pragma once

#include "crayon/corpus/batch.hpp"
#include "crayon/evaluation/metrics.hpp"
#include "crayon/model/generate.hpp"
#include "crayon/training/objective.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace crayon::eval {

using attr::AnnotationResources;
using attr::AttributeVector;
using corpus::AnnotatedExample;
using corpus::Vocabulary;

enum class Setting { system, oracle, probing };

inline const char* setting_name(Setting s) {
  switch (s) {
    case Setting::system: return "system";
    case Setting::oracle: return "oracle";
    case Setting::probing: return "probing";
  }
  return "?";
}

inline Setting setting_from_name(const std::string& s) {
  if (s == "system") return Setting::system;
  if (s == "oracle") return Setting::oracle;
  if (s == "probing") return Setting::probing;
  throw ConfigError("unknown evaluation setting '" + s + "'");
}

struct EvalReport {
  std::string corpus;
  std::string label;  // free-form row name, e.g. an ablation variant
  Setting setting = Setting::oracle;
  std::size_t examples = 0;
  std::size_t probes = 0;
  double ppl = 0.0;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double dist1 = 0.0;
  double dist2 = 0.0;
  std::optional<std::array<double, attr::kAttributeCount>> accuracy;  // percentages
  model::GenerateOptions generation;
};

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{{"corpus", r.corpus},
                   {"setting", setting_name(r.setting)},
                   {"examples", r.examples},
                   {"ppl", r.ppl},
                   {"bleu1", r.bleu1},
                   {"bleu2", r.bleu2},
                   {"dist1", r.dist1},
                   {"dist2", r.dist2},
                   {"generation", {{"sample", r.generation.sample},
                                   {"temperature", r.generation.temperature},
                                   {"max_len", r.generation.max_len}}}};
  if (!r.label.empty()) j["label"] = r.label;
  if (r.setting == Setting::probing) j["probes"] = r.probes;
  if (r.accuracy) {
    nlohmann::json acc = nlohmann::json::object();
    for (auto a : attr::kAllAttributes) acc[std::string(attr::name_of(a))] = (*r.accuracy)[attr::index_of(a)];
    j["control_accuracy"] = std::move(acc);
  }
  return j;
}

// Column order of the control-accuracy tables.
inline constexpr std::array<attr::Attribute, attr::kAttributeCount> kTableOrder{
    attr::Attribute::question_asking, attr::Attribute::length, attr::Attribute::sentiment,
    attr::Attribute::relatedness, attr::Attribute::specificity};

inline std::string render_table(const std::vector<EvalReport>& reports) {
  auto cell = [](double v, int prec) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"Model", "Setting", "PPL", "BLEU-1", "BLEU-2", "Dist-1", "Dist-2"};
  for (auto a : kTableOrder) head.emplace_back(attr::short_name_of(a));
  rows.push_back(head);
  for (const auto& r : reports) {
    std::vector<std::string> row{r.label.empty() ? r.corpus : r.label, setting_name(r.setting), cell(r.ppl, 2),
                                 cell(r.bleu1, 2), cell(r.bleu2, 2), cell(r.dist1, 4), cell(r.dist2, 4)};
    for (auto a : kTableOrder) row.push_back(r.accuracy ? cell((*r.accuracy)[attr::index_of(a)], 2) : "-");
    rows.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      if (c > 0) out << "  ";
      const auto& s = rows[i][c];
      if (c < 2) out << s << std::string(width[c] - s.size(), ' ');
      else out << std::string(width[c] - s.size(), ' ') << s;
    }
    out << "\n";
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
    }
  }
  return out.str();
}

// Runs fn(begin, end) over contiguous slices of [0, n) on worker threads.
template <typename Fn>
void parallel_ranges(std::size_t n, std::size_t chunk, Fn fn) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t s = 0; s < n; s += chunk) ranges.emplace_back(s, std::min(n, s + chunk));
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(ranges.size(), std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> tasks;
  for (std::size_t w = 0; w < workers; ++w) {
    tasks.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < ranges.size(); i = next++) fn(ranges[i].first, ranges[i].second);
    }));
  }
  for (auto& t : tasks) t.get();
}

// Greedy (or configured) generation for each (context, full attribute) pair.
template <typename S>
std::vector<Tokens> generate_responses(const model::Model<S>& m, const Vocabulary& vocab,
                                       const std::vector<Tokens>& contexts, const std::vector<AttributeVector>& attributes,
                                       const model::GenerateOptions& opt, std::size_t batch_size = 64) {
  if (contexts.size() != attributes.size()) throw std::invalid_argument("generate_responses: size mismatch");
  std::vector<Tokens> out(contexts.size());
  parallel_ranges(contexts.size(), batch_size, [&](std::size_t begin, std::size_t end) {
    std::vector<Tokens> ctx(contexts.begin() + static_cast<std::ptrdiff_t>(begin), contexts.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<attr::PartialAttributes> given;
    for (std::size_t i = begin; i < end; ++i) {
      attr::PartialAttributes p;
      for (std::size_t j = 0; j < attr::kAttributeCount; ++j) p[j] = attributes[i].values[j];
      given.push_back(p);
    }
    auto results = model::generate(m, vocab, ctx, given, opt, static_cast<std::uint64_t>(begin) + 1);
    for (std::size_t i = begin; i < end; ++i) out[i] = std::move(results[i - begin].tokens);
  });
  return out;
}

// Prior-argmax attributes for every example.
template <typename S>
std::vector<AttributeVector> system_attributes(const model::Model<S>& m, const Vocabulary& vocab,
                                               const std::vector<AnnotatedExample>& examples, std::size_t batch_size = 64) {
  std::vector<AttributeVector> out(examples.size());
  parallel_ranges(examples.size(), batch_size, [&](std::size_t begin, std::size_t end) {
    std::vector<std::vector<int>> seqs;
    for (std::size_t i = begin; i < end; ++i) seqs.push_back(vocab.encode(examples[i].dialogue.context_tokens()));
    const auto prior = model::predict_prior(m, model::ContextBatch::from_sequences(seqs));
    for (std::size_t i = begin; i < end; ++i) out[i] = model::argmax_attributes(prior[i - begin]);
  });
  return out;
}

template <typename S>
double perplexity(const model::Model<S>& m, const Vocabulary& vocab, const std::vector<AnnotatedExample>& examples,
                  train::AttributeSource source, std::size_t batch_size = 64) {
  std::vector<train::NllTotals> parts((examples.size() + batch_size - 1) / batch_size);
  parallel_ranges(examples.size(), batch_size, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
    parts[begin / batch_size] = train::teacher_forced_nll(m, corpus::make_batch(examples, idx, vocab), source);
  });
  double nll = 0.0, tokens = 0.0;
  for (const auto& p : parts) {
    nll += p.nll;
    tokens += p.tokens;
  }
  return perplexity_from_totals(nll, tokens);
}

// Percentage of responses whose re-annotated value matches the target,
// per attribute. Empty responses count as misses.
inline std::array<double, attr::kAttributeCount> control_accuracy(const std::vector<Tokens>& responses,
                                                                  const std::vector<Tokens>& last_utterances,
                                                                  const std::vector<AttributeVector>& targets,
                                                                  const AnnotationResources& res) {
  if (responses.size() != targets.size() || responses.size() != last_utterances.size()) {
    throw std::invalid_argument("control_accuracy: size mismatch");
  }
  std::array<double, attr::kAttributeCount> hits{};
  if (responses.empty()) return hits;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (responses[i].empty()) continue;  // an empty response controls nothing
    const auto got = attr::annotate_response(responses[i], last_utterances[i], res);
    for (std::size_t j = 0; j < attr::kAttributeCount; ++j) hits[j] += got.values[j] == targets[i].values[j] ? 1.0 : 0.0;
  }
  for (auto& h : hits) h = 100.0 * h / static_cast<double>(responses.size());
  return hits;
}

inline std::vector<Tokens> last_utterances(const std::vector<AnnotatedExample>& examples) {
  std::vector<Tokens> out;
  for (const auto& e : examples) out.push_back(e.dialogue.last_utterance());
  return out;
}

inline std::vector<Tokens> contexts_of(const std::vector<AnnotatedExample>& examples) {
  std::vector<Tokens> out;
  for (const auto& e : examples) out.push_back(e.dialogue.context_tokens());
  return out;
}

inline std::vector<AttributeVector> gold_attributes(const std::vector<AnnotatedExample>& examples) {
  std::vector<AttributeVector> out;
  for (const auto& e : examples) out.push_back(e.attributes);
  return out;
}

struct Probe {
  std::size_t example = 0;
  attr::Attribute attribute{};
  int value = 0;
  AttributeVector target;
};

// One probe per (attribute, value): that attribute forced, the rest gold.
inline std::vector<Probe> enumerate_probes(const std::vector<AnnotatedExample>& examples) {
  std::vector<Probe> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (auto a : attr::kAllAttributes) {
      for (int v = 0; v < attr::arity_of(a); ++v) {
        AttributeVector t = examples[i].attributes;
        t[a] = v;
        out.push_back({i, a, v, t});
      }
    }
  }
  return out;
}

inline std::array<double, attr::kAttributeCount> probing_accuracy(const std::vector<Probe>& probes,
                                                                  const std::vector<Tokens>& responses,
                                                                  const std::vector<AnnotatedExample>& examples,
                                                                  const AnnotationResources& res) {
  if (responses.size() != probes.size()) throw std::invalid_argument("probing_accuracy: size mismatch");
  std::array<double, attr::kAttributeCount> hits{}, count{};
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& pr = probes[p];
    const auto j = attr::index_of(pr.attribute);
    count[j] += 1.0;
    if (responses[p].empty()) continue;
    const auto got = attr::annotate_response(responses[p], examples[pr.example].dialogue.last_utterance(), res);
    if (got[pr.attribute] == pr.value) hits[j] += 1.0;
  }
  for (std::size_t j = 0; j < attr::kAttributeCount; ++j) hits[j] = count[j] > 0 ? 100.0 * hits[j] / count[j] : 0.0;
  return hits;
}

template <typename S>
EvalReport evaluate(const model::Model<S>& m, const Vocabulary& vocab, const std::vector<AnnotatedExample>& examples,
                    const AnnotationResources& res, Setting setting, const model::GenerateOptions& opt,
                    const std::string& corpus_name = "") {
  if (examples.empty()) throw std::invalid_argument("evaluate: no examples");
  EvalReport r;
  r.corpus = corpus_name;
  r.setting = setting;
  r.examples = examples.size();
  r.generation = opt;
  const auto source = setting == Setting::system ? train::AttributeSource::system : train::AttributeSource::oracle;
  r.ppl = perplexity(m, vocab, examples, source);

  const auto contexts = contexts_of(examples);
  const auto gold = gold_attributes(examples);
  const auto used = setting == Setting::system ? system_attributes(m, vocab, examples) : gold;
  const auto hyps = generate_responses(m, vocab, contexts, used, opt);
  std::vector<Tokens> refs;
  for (const auto& e : examples) refs.push_back(e.dialogue.response);
  r.bleu1 = bleu(hyps, refs, 1);
  r.bleu2 = bleu(hyps, refs, 2);
  r.dist1 = distinct(hyps, 1);
  r.dist2 = distinct(hyps, 2);

  if (setting == Setting::oracle) {
    r.accuracy = control_accuracy(hyps, last_utterances(examples), gold, res);
  } else if (setting == Setting::probing) {
    const auto probes = enumerate_probes(examples);
    std::vector<Tokens> probe_ctx;
    std::vector<AttributeVector> probe_attrs;
    for (const auto& p : probes) {
      probe_ctx.push_back(contexts[p.example]);
      probe_attrs.push_back(p.target);
    }
    r.probes = probes.size();
    r.accuracy = probing_accuracy(probes, generate_responses(m, vocab, probe_ctx, probe_attrs, opt), examples, res);
  }
  return r;
}

}  // namespace crayon::eval
