#pragma once

#include "crayon/nn/graph.hpp"
#include "crayon/nn/ops.hpp"

#include <deque>
#include <random>
#include <stdexcept>
#include <string>

namespace crayon::nn {

// Owns every trainable tensor of a model. Addresses are stable.
template <typename S>
class ParameterStore {
 public:
  Parameter<S>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, S init_range, std::mt19937_64& rng) {
    Matrix<S> v(rows, cols);
    if (init_range > S(0)) {
      std::uniform_real_distribution<double> dist(-double(init_range), double(init_range));
      for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = static_cast<S>(dist(rng));
    } else {
      v.setZero();
    }
    for (const auto& p : params_) {
      if (p.name == name) throw std::invalid_argument("duplicate parameter name: " + name);
    }
    params_.emplace_back(name, std::move(v));
    return params_.back();
  }

  std::deque<Parameter<S>>& all() { return params_; }
  const std::deque<Parameter<S>>& all() const { return params_; }

  Parameter<S>* find(const std::string& name) {
    for (auto& p : params_) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

 private:
  std::deque<Parameter<S>> params_;
};

template <typename S>
struct Linear {
  Parameter<S>* weight = nullptr;  // in x out
  Parameter<S>* bias = nullptr;    // 1 x out, absent when built without bias

  Linear() = default;
  Linear(ParameterStore<S>& store, const std::string& name, Eigen::Index in, Eigen::Index out, S init,
         std::mt19937_64& rng, bool with_bias = true) {
    weight = &store.add(name + ".weight", in, out, init, rng);
    if (with_bias) bias = &store.add(name + ".bias", 1, out, S(0), rng);
  }

  Eigen::Index out_dim() const { return weight->value.cols(); }

  Expr<S> operator()(Graph<S>& g, Expr<S> x) const {
    Expr<S> y = matmul(x, g.param(*weight));
    if (bias != nullptr) y = add_row(y, g.param(*bias));
    return y;
  }
};

// One tanh hidden layer followed by a linear output.
template <typename S>
struct Mlp {
  Linear<S> hidden;
  Linear<S> output;

  Mlp() = default;
  Mlp(ParameterStore<S>& store, const std::string& name, Eigen::Index in, Eigen::Index width, Eigen::Index out, S init,
      std::mt19937_64& rng)
      : hidden(store, name + ".hidden", in, width, init, rng), output(store, name + ".out", width, out, init, rng) {}

  Expr<S> operator()(Graph<S>& g, Expr<S> x) const { return output(g, tanh(hidden(g, x))); }
};

// r = σ(x Wr + h Ur), u = σ(x Wu + h Uu), n = tanh(x Wn + r ⊙ (h Un + bn)), h' = (1 − u) ⊙ n + u ⊙ h
template <typename S>
struct GruCell {
  Linear<S> input;   // in x 3H
  Linear<S> hidden;  // H x 3H
  Eigen::Index size = 0;

  GruCell() = default;
  GruCell(ParameterStore<S>& store, const std::string& name, Eigen::Index in, Eigen::Index h, S init,
          std::mt19937_64& rng)
      : input(store, name + ".input", in, 3 * h, init, rng), hidden(store, name + ".hidden", h, 3 * h, init, rng), size(h) {}

  Expr<S> operator()(Graph<S>& g, Expr<S> x, Expr<S> h) const {
    Expr<S> xi = input(g, x);
    Expr<S> hi = hidden(g, h);
    Expr<S> r = sigmoid(slice_cols(xi, 0, size) + slice_cols(hi, 0, size));
    Expr<S> u = sigmoid(slice_cols(xi, size, size) + slice_cols(hi, size, size));
    Expr<S> n = tanh(slice_cols(xi, 2 * size, size) + cmul(r, slice_cols(hi, 2 * size, size)));
    return cmul(one_minus(u), n) + cmul(u, h);
  }
};

}  // namespace crayon::nn
