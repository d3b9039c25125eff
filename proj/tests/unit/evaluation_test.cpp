#include "crayon/evaluation/ablation.hpp"
#include "world.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace crayon;
using namespace crayon::eval;

TEST(Bleu, HandComputedValues) {
  const std::vector<Tokens> hyp{{"a", "b", "c"}}, ref{{"a", "b", "d"}};
  EXPECT_NEAR(bleu(hyp, ref, 1), 100.0 * 2 / 3, 1e-9);
  EXPECT_NEAR(bleu(hyp, ref, 2), 100.0 * std::sqrt(2.0 / 3 * 1.0 / 2), 1e-9);
  EXPECT_NEAR(bleu(ref, ref, 1), 100.0, 1e-9);
  EXPECT_NEAR(bleu(ref, ref, 2), 100.0, 1e-9);
  EXPECT_EQ(bleu({{"x", "y"}}, ref, 2), 0.0);
  EXPECT_EQ(bleu({{}}, ref, 1), 0.0);
}

TEST(Bleu, BrevityPenaltyAndSmoothing) {
  EXPECT_NEAR(bleu({{"a", "b"}}, {{"a", "b", "c", "d"}}, 1), 100.0 * std::exp(1.0 - 2.0), 1e-9);
  // No bigram overlap: the bigram precision becomes 1 / 3.
  EXPECT_NEAR(bleu({{"a", "x", "b"}}, {{"a", "b"}}, 2), 100.0 * std::sqrt(2.0 / 3 * 1.0 / 3), 1e-9);
  // Clipping: "the the the" against one "the".
  EXPECT_NEAR(bleu({{"the", "the", "the"}}, {{"the", "cat", "sat"}}, 1), 100.0 / 3, 1e-9);
}

TEST(Bleu, CorpusLevelPoolsCounts) {
  const std::vector<Tokens> hyp{{"a", "b"}, {"c", "d"}}, ref{{"a", "b"}, {"c", "e"}};
  EXPECT_NEAR(bleu(hyp, ref, 1), 100.0 * 3 / 4, 1e-9);
  EXPECT_THROW(bleu(hyp, {ref[0]}, 1), std::invalid_argument);
  EXPECT_THROW(bleu(hyp, ref, 0), std::invalid_argument);
}

TEST(Distinct, HandComputedValues) {
  EXPECT_NEAR(distinct({{"a", "b", "a"}}, 1), 2.0 / 3, 1e-12);
  EXPECT_NEAR(distinct({{"a", "b", "a"}}, 2), 1.0, 1e-12);
  EXPECT_NEAR(distinct({{"a", "a"}}, 1), 0.5, 1e-12);
  EXPECT_NEAR(distinct({{"a", "b"}, {"a", "b"}}, 2), 0.5, 1e-12);
  EXPECT_EQ(distinct({{"a"}}, 2), 0.0);
  EXPECT_EQ(distinct({}, 1), 0.0);
  EXPECT_THROW(distinct({{"a"}}, 0), std::invalid_argument);
}

TEST(Perplexity, FromTotals) {
  EXPECT_NEAR(perplexity_from_totals(3 * std::log(7.0), 3), 7.0, 1e-12);
  EXPECT_THROW(perplexity_from_totals(1.0, 0), std::invalid_argument);
}

class PerplexityModel : public ::testing::Test {
 protected:
  PerplexityModel()
      : vocab(testkit::numbered_vocab(12)),
        examples(testkit::random_examples(9, 12, 3, 4, 8, true)),
        m(testkit::tiny_model_config(12)) {
    m.parameters().find("response.output.weight")->value.setZero();
  }
  corpus::Vocabulary vocab;
  std::vector<corpus::AnnotatedExample> examples;
  model::Model<double> m;
};

TEST_F(PerplexityModel, UniformOutputGivesVocabularySize) {
  m.parameters().find("response.output.bias")->value.setZero();
  EXPECT_NEAR(perplexity(m, vocab, examples, train::AttributeSource::oracle), 12.0, 1e-9);
  EXPECT_NEAR(perplexity(m, vocab, examples, train::AttributeSource::system), 12.0, 1e-9);
  EXPECT_NEAR(perplexity(m, vocab, examples, train::AttributeSource::oracle, 2), 12.0, 1e-9);
}

TEST_F(PerplexityModel, FixedDistributionByHand) {
  std::vector<double> p(12);
  double z = 0;
  for (int i = 0; i < 12; ++i) z += p[static_cast<std::size_t>(i)] = 1.0 + i;
  auto& bias = m.parameters().find("response.output.bias")->value;
  for (int i = 0; i < 12; ++i) bias(0, i) = std::log(p[static_cast<std::size_t>(i)] / z);
  double nll = 0, n = 0;
  for (const auto& e : examples) {
    for (const auto& w : e.dialogue.response) {
      nll -= std::log(p[static_cast<std::size_t>(vocab.id(w))] / z);
      ++n;
    }
    nll -= std::log(p[corpus::Vocabulary::kEos] / z);
    ++n;
  }
  EXPECT_NEAR(perplexity(m, vocab, examples, train::AttributeSource::oracle), std::exp(nll / n), 1e-9);
}

class SynthEval : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir = new std::filesystem::path(testkit::scratch_dir("evaluation"));
    corpus::SynthConfig sc;
    sc.train = 150;
    sc.valid = 20;
    sc.test = 20;
    w = new testkit::World(testkit::synth_world(sc, *dir));
  }
  static void TearDownTestSuite() {
    std::filesystem::remove_all(*dir);
    delete w;
    delete dir;
  }
  static std::filesystem::path* dir;
  static testkit::World* w;
};

std::filesystem::path* SynthEval::dir = nullptr;
testkit::World* SynthEval::w = nullptr;

TEST_F(SynthEval, GoldResponsesScorePerfectControl) {
  std::vector<Tokens> gold;
  for (const auto& e : w->test) gold.push_back(e.dialogue.response);
  const auto acc = control_accuracy(gold, last_utterances(w->test), gold_attributes(w->test), w->res);
  for (double a : acc) EXPECT_DOUBLE_EQ(a, 100.0);
  EXPECT_THROW(control_accuracy(gold, {}, gold_attributes(w->test), w->res), std::invalid_argument);
}

TEST_F(SynthEval, EmptyResponsesCountAsMisses) {
  std::vector<Tokens> hyps;
  for (const auto& e : w->test) hyps.push_back(e.dialogue.response);
  hyps[0].clear();
  hyps[1].clear();
  const auto acc = control_accuracy(hyps, last_utterances(w->test), gold_attributes(w->test), w->res);
  const double n = static_cast<double>(w->test.size());
  for (double a : acc) EXPECT_NEAR(a, 100.0 * (n - 2) / n, 1e-9);

  const std::vector<corpus::AnnotatedExample> one{w->test.front()};
  const auto probes = enumerate_probes(one);
  const auto none = probing_accuracy(probes, std::vector<Tokens>(probes.size()), one, w->res);
  for (double a : none) EXPECT_EQ(a, 0.0);
  EXPECT_THROW(probing_accuracy(probes, {}, one, w->res), std::invalid_argument);
}

TEST_F(SynthEval, FixedStatementScoresByLengthBin) {
  const Tokens fixed(12, "the");
  const std::vector<Tokens> hyps(w->test.size(), fixed);
  const auto acc = control_accuracy(hyps, last_utterances(w->test), gold_attributes(w->test), w->res);
  const auto& cuts = w->res.schema[attr::Attribute::length].response_bin_boundaries;
  int bin = 0;
  for (double c : cuts) bin += 12.0 > c ? 1 : 0;
  double len_hits = 0, statement_hits = 0;
  for (const auto& e : w->test) {
    len_hits += e.attributes[attr::Attribute::length] == bin;
    statement_hits += e.attributes[attr::Attribute::question_asking] == 0;
  }
  const double n = static_cast<double>(w->test.size());
  EXPECT_NEAR(acc[attr::index_of(attr::Attribute::length)], 100.0 * len_hits / n, 1e-9);
  EXPECT_NEAR(acc[attr::index_of(attr::Attribute::question_asking)], 100.0 * statement_hits / n, 1e-9);
}

TEST_F(SynthEval, ProbesCoverEveryValueOnce) {
  const std::vector<corpus::AnnotatedExample> one{w->test.front()};
  const auto probes = enumerate_probes(one);
  ASSERT_EQ(probes.size(), 14u);
  std::array<int, 5> per{};
  for (const auto& p : probes) {
    ++per[attr::index_of(p.attribute)];
    for (auto a : attr::kAllAttributes) {
      EXPECT_EQ(p.target[a], a == p.attribute ? p.value : one[0].attributes[a]);
    }
  }
  EXPECT_EQ(per, (std::array<int, 5>{3, 3, 3, 2, 3}));
  EXPECT_EQ(enumerate_probes(w->test).size(), 14 * w->test.size());
}

TEST_F(SynthEval, ReportsForAllSettings) {
  model::Model<float> m(testkit::tiny_model_config(w->vocab.size()));
  model::GenerateOptions opt;
  opt.max_len = 8;
  const std::vector<corpus::AnnotatedExample> few(w->test.begin(), w->test.begin() + 5);
  const auto oracle = evaluate(m, w->vocab, few, w->res, Setting::oracle, opt, "synth");
  const auto system = evaluate(m, w->vocab, few, w->res, Setting::system, opt, "synth");
  const auto probing = evaluate(m, w->vocab, few, w->res, Setting::probing, opt, "synth");
  EXPECT_TRUE(oracle.accuracy.has_value());
  EXPECT_FALSE(system.accuracy.has_value());
  EXPECT_EQ(probing.probes, 70u);
  EXPECT_GT(oracle.ppl, 1.0);
  const auto j = to_json(probing);
  for (const char* k : {"corpus", "setting", "examples", "ppl", "bleu1", "bleu2", "dist1", "dist2", "generation",
                        "probes", "control_accuracy"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j["control_accuracy"].size(), 5u);
  EXPECT_THROW(evaluate(m, w->vocab, {}, w->res, Setting::oracle, opt), std::invalid_argument);
}

TEST(Table, ColumnsInReportingOrder) {
  EvalReport r;
  r.corpus = "synth";
  r.accuracy = std::array<double, 5>{10, 20, 30, 40, 50};
  const auto table = render_table({r});
  const auto header = table.substr(0, table.find('\n'));
  std::vector<std::string> cols;
  std::istringstream in(header);
  for (std::string c; in >> c;) cols.push_back(c);
  EXPECT_EQ(cols, (std::vector<std::string>{"Model", "Setting", "PPL", "BLEU-1", "BLEU-2", "Dist-1", "Dist-2", "Q-A",
                                            "Len.", "Sent.", "Rel.", "Spe."}));
  const auto row = table.substr(table.rfind("synth"));
  std::vector<std::string> cells;
  std::istringstream rin(row);
  for (std::string c; rin >> c;) cells.push_back(c);
  ASSERT_EQ(cells.size(), 12u);
  EXPECT_EQ(cells[7], "40.00");
  EXPECT_EQ(cells[8], "50.00");
  EXPECT_EQ(cells[9], "20.00");
  EXPECT_EQ(cells[10], "30.00");
  EXPECT_EQ(cells[11], "10.00");
}

TEST(Settings, NamesRoundTrip) {
  for (auto s : {Setting::system, Setting::oracle, Setting::probing}) EXPECT_EQ(setting_from_name(setting_name(s)), s);
  EXPECT_THROW(setting_from_name("gold"), ConfigError);
}

TEST(Ablation, BaselinePlusOneVariantPerAttribute) {
  const auto v = ablation_variants();
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v[0].label, "baseline");
  for (bool e : v[0].enabled) EXPECT_FALSE(e);
  for (std::size_t i = 1; i < 6; ++i) {
    int on = 0;
    for (bool e : v[i].enabled) on += e;
    EXPECT_EQ(on, 1);
    EXPECT_TRUE(v[i].enabled[i - 1]);
  }
}
