#include "crayon/model/checkpoint.hpp"
#include "crayon/model/generate.hpp"
#include "crayon/model/gumbel.hpp"
#include "crayon/model/model.hpp"
#include "world.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace crayon;
using namespace crayon::model;
using nn::Expr;
using nn::Graph;
using nn::Matrix;

namespace {

using Md = Matrix<double>;

Md random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Md m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

void expect_rows_sum_to_one(const Md& lp_or_p, bool is_log) {
  for (Eigen::Index r = 0; r < lp_or_p.rows(); ++r) {
    double s = 0;
    for (Eigen::Index c = 0; c < lp_or_p.cols(); ++c) {
      const double p = is_log ? std::exp(lp_or_p(r, c)) : lp_or_p(r, c);
      EXPECT_GE(p, 0.0);
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

// Gradient check of a scalar function of freshly made parameters.
struct OpCase {
  const char* name;
  std::vector<std::pair<int, int>> shapes;
  std::function<Expr<double>(Graph<double>&, std::vector<Expr<double>>&)> f;
};

}  // namespace

TEST(Ops, GradientsMatchFiniteDifferences) {
  const std::vector<int> idx{2, 0, 1};
  const std::vector<double> w{1.0, 0.5, -2.0};
  const std::vector<int> rows{3, 0, 3, 1};
  const std::vector<int> pos{1, 2, 0};
  const std::vector<OpCase> cases{
      {"matmul", {{3, 4}, {4, 2}}, [](auto& g, auto& x) { return nn::sum_all(nn::tanh(nn::matmul(x[0], x[1]))); }},
      {"add_sub", {{3, 4}, {3, 4}}, [](auto& g, auto& x) { return nn::sum_all(nn::tanh(x[0] + x[1] - nn::cmul(x[0], x[1]))); }},
      {"add_row", {{3, 4}, {1, 4}}, [](auto& g, auto& x) { return nn::sum_all(nn::sigmoid(nn::add_row(x[0], x[1]))); }},
      {"affine_exp", {{2, 3}}, [](auto& g, auto& x) { return nn::sum_all(nn::exp(nn::affine(x[0], 0.7, 0.1))); }},
      {"one_minus", {{2, 3}}, [](auto& g, auto& x) { return nn::sum_all(nn::cmul(nn::one_minus(x[0]), x[0])); }},
      {"concat_slice", {{3, 2}, {3, 3}},
       [](auto& g, auto& x) {
         auto c = nn::concat_cols({x[0], x[1]});
         return nn::sum_all(nn::tanh(nn::cmul(nn::slice_cols(c, 1, 3), nn::slice_cols(c, 2, 3))));
       }},
      {"log_softmax_pick", {{3, 5}},
       [&](auto& g, auto& x) { return nn::pick_sum(nn::log_softmax(x[0]), std::span<const int>(idx), std::span<const double>(w)); }},
      {"softmax", {{3, 5}}, [](auto& g, auto& x) { return nn::sum_all(nn::cmul(nn::softmax(x[0]), nn::tanh(x[0]))); }},
      {"mul_col_row_dot", {{3, 4}, {3, 1}, {3, 4}},
       [](auto& g, auto& x) { return nn::sum_all(nn::tanh(nn::row_dot(nn::mul_col(x[0], x[1]), x[2]))); }},
      {"lookup", {{5, 3}},
       [&](auto& g, auto& x) { return nn::sum_all(nn::tanh(nn::lookup(x[0], std::span<const int>(rows)))); }},
      {"attention_blocks", {{3, 2}, {3, 6}},
       [&](auto& g, auto& x) {
         auto a = nn::softmax(nn::block_dot(x[0], x[1], 3));
         auto c = nn::block_weighted_sum(a, x[1], 3);
         auto s = nn::select_block(x[1], std::span<const int>(pos), 3);
         return nn::sum_all(nn::tanh(nn::cmul(c, s)));
       }},
  };
  for (const auto& c : cases) {
    nn::ParameterStore<double> store;
    std::mt19937_64 rng(17);
    std::vector<nn::Parameter<double>*> ps;
    for (std::size_t i = 0; i < c.shapes.size(); ++i) {
      ps.push_back(&store.add("p" + std::to_string(i), c.shapes[i].first, c.shapes[i].second, 1.0, rng));
    }
    auto loss = [&](Graph<double>& g) {
      std::vector<Expr<double>> x;
      for (auto* p : ps) x.push_back(g.param(*p));
      return c.f(g, x);
    };
    const auto r = testkit::check_gradients(store, loss, 1000, 1e-6, 1, 1e-6);
    EXPECT_EQ(r.failed, 0u) << c.name << " worst " << r.worst << " at " << r.worst_name;
  }
}

TEST(Ops, ShapeErrors) {
  Graph<double> g;
  auto a = g.constant(Md::Zero(2, 3));
  auto b = g.constant(Md::Zero(2, 2));
  EXPECT_THROW(nn::matmul(a, b), std::invalid_argument);
  EXPECT_THROW(nn::add(a, b), std::invalid_argument);
  EXPECT_THROW(nn::slice_cols(a, 2, 2), std::out_of_range);
  EXPECT_THROW(g.backward(a), std::invalid_argument);
}

TEST(GruCell, GradientCheck) {
  nn::ParameterStore<double> store;
  std::mt19937_64 rng(3);
  nn::GruCell<double> cell(store, "gru", 3, 4, 0.5, rng);
  auto& x = store.add("x", 2, 3, 1.0, rng);
  auto& h = store.add("h", 2, 4, 1.0, rng);
  auto loss = [&](Graph<double>& g) {
    auto s = cell(g, g.param(x), g.param(h));
    s = cell(g, g.param(x), s);
    return nn::sum_all(nn::cmul(s, s));
  };
  const auto r = testkit::check_gradients(store, loss, 1000, 1e-6, 2, 1e-6);
  EXPECT_EQ(r.failed, 0u) << r.worst << " " << r.worst_name;
}

class TinyModel : public ::testing::Test {
 protected:
  TinyModel() : cfg(testkit::tiny_model_config(20)), m(cfg) {}
  ModelConfig cfg;
  Model<double> m;
  Dropout<double> none;
};

TEST_F(TinyModel, EncoderShapes) {
  Graph<double> g;
  const std::vector<int> ids{4, 5, 6, 7, 8, 9, 10};
  const std::vector<int> len{7};
  const auto enc = m.encode(g, ids, 1, 7, len, none);
  EXPECT_EQ(enc.positions, 7);
  EXPECT_EQ(enc.memory.cols(), 7 * cfg.encoder_hidden);
  EXPECT_EQ(enc.final.cols(), cfg.encoder_hidden);
  EXPECT_EQ(cfg.encoder_direction_hidden() * 2, cfg.encoder_hidden);
}

TEST_F(TinyModel, FullSizeConfigurationShapes) {
  ModelConfig full;
  full.vocab_size = 12;
  full.encoder_layers = 1;
  Model<float> big(full);
  Graph<float> g;
  g.set_track_gradients(false);
  const std::vector<int> ids{4, 5, 6, 7, 8, 9, 10};
  const std::vector<int> len{7};
  const auto enc = big.encode(g, ids, 1, 7, len, Dropout<float>{});
  EXPECT_EQ(enc.memory.cols(), 7 * 300);
  EXPECT_EQ(full.encoder_direction_hidden(), 150);
  const auto c = big.embed(g, std::vector<attr::AttributeVector>{attr::AttributeVector{}});
  EXPECT_EQ(c.local.cols(), 600);
  EXPECT_EQ(c.global.cols(), 900);
  EXPECT_EQ(c.all.cols(), 1500);
}

TEST_F(TinyModel, PaddedAndUnpaddedEncodingsAgree) {
  const std::vector<int> a{4, 5, 6}, b{7, 8, 9, 10, 11};
  Graph<double> g;
  const auto single = m.encode(g, a, 1, 3, std::vector<int>{3}, none);
  std::vector<int> both{4, 5, 6, 0, 0, 7, 8, 9, 10, 11};
  const auto batched = m.encode(g, both, 2, 5, std::vector<int>{3, 5}, none);
  const int h = cfg.encoder_hidden;
  const Md s = single.memory.value();
  const Md p = batched.memory.value().row(0);
  for (int t = 0; t < 3; ++t) {
    EXPECT_LT((s.middleCols(t * h, h) - p.middleCols(t * h, h)).cwiseAbs().maxCoeff(), 1e-12) << "position " << t;
  }
  EXPECT_LT((single.final.value() - batched.final.value().row(0)).cwiseAbs().maxCoeff(), 1e-12);
  const auto again = m.encode(g, a, 1, 3, std::vector<int>{3}, none);
  EXPECT_EQ(again.memory.value(), single.memory.value());
}

TEST_F(TinyModel, PriorAndPosteriorAreDistributions) {
  Graph<double> g;
  const std::vector<int> x{4, 5, 6, 7, 8, 9}, y1{10, 11, 12, 13, 14, 15}, y2{16, 17, 18, 19, 4, 5};
  const auto ex = m.encode(g, x, 2, 3, std::vector<int>{3, 3}, none);
  const auto ey1 = m.encode(g, y1, 2, 3, std::vector<int>{3, 3}, none);
  const auto ey2 = m.encode(g, y2, 2, 3, std::vector<int>{3, 3}, none);
  const auto prior = m.prior(g, ex.final);
  const auto post1 = m.posterior(g, ex.final, ey1.final);
  const auto post2 = m.posterior(g, ex.final, ey2.final);
  for (auto a : attr::kAllAttributes) {
    const auto j = attr::index_of(a);
    EXPECT_EQ(prior[j].cols(), attr::arity_of(a));
    expect_rows_sum_to_one(prior[j].value(), true);
    expect_rows_sum_to_one(post1[j].value(), true);
    EXPECT_GT((post1[j].value() - post2[j].value()).cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(prior[attr::index_of(attr::Attribute::question_asking)].cols(), 2);
  // The prior never sees the response.
  const auto prior_again = m.prior(g, ex.final);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(prior[j].value(), prior_again[j].value());
  auto* w = m.parameters().find("posterior.sentiment.hidden.weight");
  ASSERT_NE(w, nullptr);
  EXPECT_EQ(w->value.rows(), 2 * cfg.encoder_hidden);
}

TEST_F(TinyModel, ZeroedPriorWeightsGiveUniform) {
  for (auto& p : m.parameters().all()) {
    if (p.name.rfind("prior.", 0) == 0 || p.name.rfind("style.head.", 0) == 0) p.value.setZero();
  }
  Graph<double> g;
  const auto ex = m.encode(g, std::vector<int>{4, 5}, 1, 2, std::vector<int>{2}, none);
  const auto prior = m.prior(g, ex.final);
  for (auto a : attr::kAllAttributes) {
    const auto& lp = prior[attr::index_of(a)].value();
    for (Eigen::Index c = 0; c < lp.cols(); ++c) EXPECT_NEAR(std::exp(lp(0, c)), 1.0 / attr::arity_of(a), 1e-12);
  }
  const auto control = m.embed(g, std::vector<attr::AttributeVector>{attr::AttributeVector{}});
  const auto h = m.style_step(g, m.style_initial(g, ex.final), control.local);
  for (const auto& head : m.style_log_probs(g, h)) {
    EXPECT_EQ(head.cols(), 6);
    for (Eigen::Index c = 0; c < 6; ++c) EXPECT_NEAR(std::exp(head.value()(0, c)), 1.0 / 6, 1e-12);
  }
}

TEST_F(TinyModel, EmbeddingMixturesAndSlices) {
  Graph<double> g;
  attr::AttributeVector z;
  z.values = {2, 0, 1, 1, 2};
  const auto hard = m.embed(g, std::vector<attr::AttributeVector>{z});
  std::array<Expr<double>, 5> w;
  for (auto a : attr::kAllAttributes) {
    const std::vector<int> v{z[a]};
    w[attr::index_of(a)] = g.constant(one_hot<double>(v, attr::arity_of(a)));
  }
  const auto mixed = m.embed(g, w);
  EXPECT_EQ(mixed.all.value(), hard.all.value());
  const auto* table = m.parameters().find("attr_embedding.specificity");
  EXPECT_EQ(Md(hard.local.value().leftCols(cfg.attr_dim)), Md(table->value.row(2)));

  attr::AttributeVector z2 = z;
  z2[attr::Attribute::sentiment] = 2;
  z2[attr::Attribute::length] = 0;
  const auto other = m.embed(g, std::vector<attr::AttributeVector>{z2});
  EXPECT_EQ(other.local.value(), hard.local.value());
  EXPECT_NE(other.global.value(), hard.global.value());
}

TEST_F(TinyModel, GlobalSliceOfControlStateIsConstant) {
  Graph<double> g;
  const auto ex = m.encode(g, std::vector<int>{4, 5, 6}, 1, 3, std::vector<int>{3}, none);
  attr::AttributeVector z;
  z.values = {1, 2, 0, 1, 1};
  const auto c = m.embed(g, std::vector<attr::AttributeVector>{z});
  Expr<double> local = m.style_initial(g, ex.final);
  std::vector<Md> globals;
  std::vector<Md> locals;
  for (int t = 0; t < 4; ++t) {
    local = m.style_step(g, local, c.local);
    const auto hz = Model<double>::control_state(local, c.global);
    globals.push_back(hz.value().rightCols(3 * cfg.attr_dim));
    locals.push_back(hz.value().leftCols(cfg.decoder_hidden));
  }
  for (int t = 1; t < 4; ++t) {
    EXPECT_EQ(globals[static_cast<std::size_t>(t)], globals[0]);
    EXPECT_NE(locals[static_cast<std::size_t>(t)], locals[0]);
  }
}

TEST_F(TinyModel, ZeroLocalEmbeddingGivesZeroGatedInput) {
  Graph<double> g;
  const auto zero = g.constant(Md::Zero(1, 2 * cfg.attr_dim));
  Expr<double> h = g.constant(Md::Random(1, cfg.decoder_hidden));
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(m.style_gated_input(g, h, zero).value().cwiseAbs().maxCoeff(), 0.0);
    h = m.style_step(g, h, zero);
  }
}

TEST_F(TinyModel, StyleStateGradientWrtLocalEmbedding) {
  attr::AttributeVector z;
  z.values = {1, 0, 2, 0, 1};
  const std::vector<int> ids{4, 5, 6};
  auto h3 = [&](Graph<double>& g) {
    const auto ex = m.encode(g, ids, 1, 3, std::vector<int>{3}, none);
    const auto c = m.embed(g, std::vector<attr::AttributeVector>{z});
    Expr<double> h = m.style_initial(g, ex.final);
    for (int t = 0; t < 3; ++t) h = m.style_step(g, h, c.local);
    Md probe(h.cols(), 1);
    for (Eigen::Index i = 0; i < probe.rows(); ++i) probe(i, 0) = 0.3 + 0.1 * static_cast<double>(i);
    return nn::matmul(h, g.constant(probe));
  };
  // Check only the two local embedding tables.
  nn::ParameterStore<double>& store = m.parameters();
  store.zero_grad();
  {
    Graph<double> g;
    g.backward(h3(g));
  }
  for (const char* name : {"attr_embedding.specificity", "attr_embedding.relatedness"}) {
    auto* p = store.find(name);
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x, eps = 1e-6;
      auto f = [&] {
        Graph<double> g;
        g.set_track_gradients(false);
        return h3(g).scalar();
      };
      x = saved + eps;
      const double up = f();
      x = saved - eps;
      const double down = f();
      x = saved;
      EXPECT_LT(testkit::relative_error(p->grad.data()[i], (up - down) / (2 * eps)), 1e-4) << name << "[" << i << "]";
    }
  }
}

TEST_F(TinyModel, DecodeStepDistributions) {
  Graph<double> g;
  const auto ex = m.encode(g, std::vector<int>{4, 5, 6, 7, 0, 0}, 2, 3, std::vector<int>{3, 1}, none);
  const auto c = m.embed(g, std::vector<attr::AttributeVector>(2));
  const auto local = m.style_step(g, m.style_initial(g, ex.final), c.local);
  const auto s = m.decode_step(g, m.response_initial(g, ex.final), std::vector<int>{2, 2},
                               Model<double>::control_state(local, c.global), ex, none);
  EXPECT_EQ(s.log_probs.cols(), cfg.vocab_size);
  expect_rows_sum_to_one(s.log_probs.value(), true);
  expect_rows_sum_to_one(s.attention.value(), false);
  // Row 1 has one real position: all attention on it and c_t equals that state.
  EXPECT_NEAR(s.attention.value()(1, 0), 1.0, 1e-12);
  const Md state0 = ex.memory.value().row(1).leftCols(cfg.encoder_hidden);
  EXPECT_LT((Md(s.context.value().row(1)) - state0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gumbel, DominantLogitAtLowTemperature) {
  std::mt19937_64 rng(1);
  const std::vector<double> logits{10, 0, 0};
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = gumbel_sample(logits, 0.1, rng);
    double sum = 0;
    for (double v : s) {
      EXPECT_GT(v, 0.0 - 1e-300);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    hits += s[0] > 0.99;
  }
  EXPECT_GE(hits, 990);
  EXPECT_THROW(gumbel_sample(logits, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(gumbel_sample(logits, -1.0, rng), std::invalid_argument);
}

TEST(Gumbel, BatchVersionRowsSumToOne) {
  std::mt19937_64 rng(2);
  Graph<double> g;
  Md lp(2, 3);
  lp << std::log(0.2), std::log(0.3), std::log(0.5), std::log(0.6), std::log(0.3), std::log(0.1);
  const auto s = gumbel_softmax(g.constant(lp), 0.5, rng);
  expect_rows_sum_to_one(s.value(), false);
}

TEST(Gumbel, ArgmaxFrequenciesMatchCategorical) {
  std::mt19937_64 rng(4);
  const std::vector<double> p{0.2, 0.3, 0.5};
  std::vector<double> logits;
  for (double x : p) logits.push_back(std::log(x));
  std::array<int, 3> count{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto s = gumbel_sample(logits, 0.5, rng);
    ++count[static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin())];
  }
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(count[k] / double(n), p[k], 0.02) << k;
}

class TinyGeneration : public ::testing::Test {
 protected:
  TinyGeneration() : vocab(testkit::numbered_vocab(20)), m(testkit::tiny_model_config(20)) {}
  corpus::Vocabulary vocab;
  Model<double> m;
  std::vector<Tokens> contexts{{"w4", "w5", "w6"}, {"w7"}};
};

TEST_F(TinyGeneration, SuppliedAttributesAreUsedVerbatim) {
  attr::PartialAttributes p;
  const std::array<int, 5> v{2, 0, 1, 1, 2};
  for (std::size_t j = 0; j < 5; ++j) p[j] = v[j];
  const auto r = generate(m, vocab, contexts, {p, p}, GenerateOptions{});
  EXPECT_EQ(r[0].used.values, v);
  EXPECT_EQ(r[1].used.values, v);
}

TEST_F(TinyGeneration, MissingAttributesFilledByPriorArgmax) {
  attr::PartialAttributes none{};
  attr::PartialAttributes some{};
  some[1] = 2;
  const auto r = generate(m, vocab, contexts, {none, some}, GenerateOptions{});
  const auto prior = predict_prior(m, ContextBatch::from_sequences({vocab.encode(contexts[0]), vocab.encode(contexts[1])}));
  for (std::size_t j = 0; j < 5; ++j) {
    const auto& p0 = prior[0][j];
    EXPECT_EQ(r[0].used.values[j], std::max_element(p0.begin(), p0.end()) - p0.begin());
    double s = 0;
    for (double x : r[0].prior[j]) s += x;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_EQ(r[1].used.values[1], 2);
}

TEST_F(TinyGeneration, GreedyIsDeterministicAndBounded) {
  GenerateOptions opt;
  opt.max_len = 7;
  const auto a = generate(m, vocab, contexts, {{}, {}}, opt);
  const auto b = generate(m, vocab, contexts, {{}, {}}, opt);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_LE(a[i].tokens.size(), 7u);
    EXPECT_EQ(a[i].token_styles.size(), a[i].tokens.size());
    for (int id : a[i].ids) {
      EXPECT_NE(id, corpus::Vocabulary::kPad);
      EXPECT_NE(id, corpus::Vocabulary::kBos);
      EXPECT_NE(id, corpus::Vocabulary::kEos);
    }
  }
  opt.max_len = 0;
  EXPECT_THROW(generate(m, vocab, contexts, {{}, {}}, opt), std::invalid_argument);
}

TEST_F(TinyGeneration, SamplingIsSeeded) {
  GenerateOptions opt;
  opt.sample = true;
  opt.max_len = 10;
  const auto a = generate(m, vocab, contexts, {{}, {}}, opt, 5);
  const auto b = generate(m, vocab, contexts, {{}, {}}, opt, 5);
  EXPECT_EQ(a[0].tokens, b[0].tokens);
  EXPECT_EQ(a[1].tokens, b[1].tokens);
  opt.temperature = 0;
  EXPECT_THROW(generate(m, vocab, contexts, {{}, {}}, opt, 5), std::invalid_argument);
}

TEST_F(TinyGeneration, CheckpointRoundTripKeepsGreedyOutput) {
  const auto dir = testkit::scratch_dir("ckpt");
  attr::AnnotationResources res;
  res.schema[attr::Attribute::specificity].response_bin_boundaries = {0.2, 0.4};
  res.schema[attr::Attribute::relatedness].response_bin_boundaries = {0.1, 0.5};
  res.schema[attr::Attribute::length].response_bin_boundaries = {5, 10};
  res.schema[attr::Attribute::relatedness].token_bin_boundaries = {0, 0.1, 0.2, 0.3, 0.4};
  save_checkpoint(dir / "m.ckpt", m, vocab, res, {{"stage", "test"}});
  const auto ck = load_checkpoint<double>(dir / "m.ckpt");
  EXPECT_EQ(ck.extra["stage"], "test");
  EXPECT_EQ(ck.vocab.words(), vocab.words());
  GenerateOptions opt;
  opt.max_len = 12;
  const auto a = generate(m, vocab, contexts, {{}, {}}, opt);
  const auto b = generate(*ck.model, ck.vocab, contexts, {{}, {}}, opt);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a[i].tokens, b[i].tokens);
  auto p = m.parameters().all().begin();
  for (const auto& q : ck.model->parameters().all()) {
    EXPECT_EQ(q.name, p->name);
    EXPECT_EQ(q.value, p->value);
    ++p;
  }
  // Loading into float converts every tensor.
  const auto f = load_checkpoint<float>(dir / "m.ckpt");
  EXPECT_EQ(f.model->parameters().scalar_count(), m.parameters().scalar_count());
  EXPECT_EQ(digest_hex(read_file(dir / "m.ckpt")), digest_hex(read_file(dir / "m.ckpt")));
}

TEST(Checkpoint, CorruptInputRejected) {
  EXPECT_THROW(deserialize_checkpoint<float>("not a checkpoint"), ConfigError);
  EXPECT_THROW(load_checkpoint<float>("/nonexistent/crayon.ckpt"), InputError);
}

TEST(ModelConfig, RejectsBadValues) {
  auto c = testkit::tiny_model_config(20);
  c.encoder_hidden = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = testkit::tiny_model_config(20);
  c.keep_prob = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = testkit::tiny_model_config(20);
  EXPECT_THROW(update_from_json(c, {{"hiden", 3}}), ConfigError);
  update_from_json(c, {{"enabled", {{"length", false}}}});
  EXPECT_FALSE(c.is_enabled(attr::Attribute::length));
}
