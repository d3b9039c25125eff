#pragma once

#include "crayon/nn/graph.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace crayon::nn {

namespace detail {

template <typename S>
void require_same_graph(const Expr<S>& a, const Expr<S>& b) {
  if (a.graph != b.graph) throw std::invalid_argument("expressions belong to different graphs");
}

template <typename S>
void require_same_shape(const Expr<S>& a, const Expr<S>& b, const char* op) {
  require_same_graph(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace detail

template <typename S>
Expr<S> matmul(Expr<S> a, Expr<S> b) {
  detail::require_same_graph(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Graph<S>* g = a.graph;
  const bool ng = g->needs_grad(a.id) || g->needs_grad(b.id);
  Matrix<S> v = a.value() * b.value();
  return g->add_node(std::move(v), ng, [g, ia = a.id, ib = b.id](const Matrix<S>& d) {
    if (g->needs_grad(ia)) g->accumulate(ia, d * g->value(ib).transpose());
    if (g->needs_grad(ib)) g->accumulate(ib, g->value(ia).transpose() * d);
  });
}

template <typename S>
Expr<S> add(Expr<S> a, Expr<S> b) {
  detail::require_same_shape(a, b, "add");
  Graph<S>* g = a.graph;
  const bool ng = g->needs_grad(a.id) || g->needs_grad(b.id);
  Matrix<S> v = a.value() + b.value();
  return g->add_node(std::move(v), ng, [g, ia = a.id, ib = b.id](const Matrix<S>& d) {
    g->accumulate(ia, d);
    g->accumulate(ib, d);
  });
}

template <typename S>
Expr<S> sub(Expr<S> a, Expr<S> b) {
  detail::require_same_shape(a, b, "sub");
  Graph<S>* g = a.graph;
  const bool ng = g->needs_grad(a.id) || g->needs_grad(b.id);
  Matrix<S> v = a.value() - b.value();
  return g->add_node(std::move(v), ng, [g, ia = a.id, ib = b.id](const Matrix<S>& d) {
    g->accumulate(ia, d);
    g->accumulate(ib, -d);
  });
}

template <typename S>
Expr<S> operator+(Expr<S> a, Expr<S> b) {
  return add(a, b);
}

template <typename S>
Expr<S> operator-(Expr<S> a, Expr<S> b) {
  return sub(a, b);
}

// a (B x D) + row (1 x D), broadcast over rows.
template <typename S>
Expr<S> add_row(Expr<S> a, Expr<S> row) {
  detail::require_same_graph(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: bias shape mismatch");
  Graph<S>* g = a.graph;
  const bool ng = g->needs_grad(a.id) || g->needs_grad(row.id);
  Matrix<S> v = a.value().rowwise() + row.value().row(0);
  return g->add_node(std::move(v), ng, [g, ia = a.id, ir = row.id](const Matrix<S>& d) {
    g->accumulate(ia, d);
    if (g->needs_grad(ir)) g->accumulate(ir, d.colwise().sum());
  });
}

template <typename S>
Expr<S> cmul(Expr<S> a, Expr<S> b) {
  detail::require_same_shape(a, b, "cmul");
  Graph<S>* g = a.graph;
  const bool ng = g->needs_grad(a.id) || g->needs_grad(b.id);
  Matrix<S> v = a.value().cwiseProduct(b.value());
  return g->add_node(std::move(v), ng, [g, ia = a.id, ib = b.id](const Matrix<S>& d) {
    if (g->needs_grad(ia)) g->accumulate(ia, d.cwiseProduct(g->value(ib)));
    if (g->needs_grad(ib)) g->accumulate(ib, d.cwiseProduct(g->value(ia)));
  });
}

// scale * a + shift, element-wise.
template <typename S>
Expr<S> affine(Expr<S> a, S scale, S shift = S(0)) {
  Graph<S>* g = a.graph;
  Matrix<S> v = (a.value().array() * scale + shift).matrix();
  return g->add_node(std::move(v), g->needs_grad(a.id),
                     [g, ia = a.id, scale](const Matrix<S>& d) { g->accumulate(ia, d * scale); });
}

template <typename S>
Expr<S> one_minus(Expr<S> a) {
  return affine(a, S(-1), S(1));
}

template <typename S>
Expr<S> sigmoid(Expr<S> a) {
  Graph<S>* g = a.graph;
  Matrix<S> v = a.value().unaryExpr([](S x) {
    if (x >= 0) return S(1) / (S(1) + std::exp(-x));
    const S e = std::exp(x);
    return e / (S(1) + e);
  });
  const std::size_t out = g->size();
  return g->add_node(std::move(v), g->needs_grad(a.id), [g, ia = a.id, out](const Matrix<S>& d) {
    const auto& y = g->value(out).array();
    g->accumulate(ia, (d.array() * y * (S(1) - y)).matrix());
  });
}

template <typename S>
Expr<S> tanh(Expr<S> a) {
  Graph<S>* g = a.graph;
  Matrix<S> v = a.value().array().tanh().matrix();
  const std::size_t out = g->size();
  return g->add_node(std::move(v), g->needs_grad(a.id), [g, ia = a.id, out](const Matrix<S>& d) {
    const auto& y = g->value(out).array();
    g->accumulate(ia, (d.array() * (S(1) - y.square())).matrix());
  });
}

template <typename S>
Expr<S> exp(Expr<S> a) {
  Graph<S>* g = a.graph;
  Matrix<S> v = a.value().array().exp().matrix();
  const std::size_t out = g->size();
  return g->add_node(std::move(v), g->needs_grad(a.id), [g, ia = a.id, out](const Matrix<S>& d) {
    g->accumulate(ia, d.cwiseProduct(g->value(out)));
  });
}

template <typename S>
Expr<S> concat_cols(std::span<const Expr<S>> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Graph<S>* g = parts.front().graph;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool ng = false;
  for (const auto& p : parts) {
    if (p.graph != g || p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
    ng = ng || g->needs_grad(p.id);
  }
  Matrix<S> v(rows, cols);
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    spans.emplace_back(p.id, p.cols());
    at += p.cols();
  }
  return g->add_node(std::move(v), ng, [g, spans = std::move(spans)](const Matrix<S>& d) {
    Eigen::Index off = 0;
    for (const auto& [id, width] : spans) {
      if (g->needs_grad(id)) g->accumulate(id, d.middleCols(off, width));
      off += width;
    }
  });
}

template <typename S>
Expr<S> concat_cols(std::initializer_list<Expr<S>> parts) {
  std::vector<Expr<S>> v(parts);
  return concat_cols(std::span<const Expr<S>>(v));
}

template <typename S>
Expr<S> slice_cols(Expr<S> a, Eigen::Index start, Eigen::Index width) {
  if (start < 0 || width < 0 || start + width > a.cols()) throw std::out_of_range("slice_cols: out of range");
  Graph<S>* g = a.graph;
  Matrix<S> v = a.value().middleCols(start, width);
  return g->add_node(std::move(v), g->needs_grad(a.id),
                     [g, ia = a.id, start, width](const Matrix<S>& d) {
                       g->grad_buffer(ia).middleCols(start, width) += d;
                     });
}

// Row-wise log-softmax.
template <typename S>
Expr<S> log_softmax(Expr<S> a) {
  Graph<S>* g = a.graph;
  const auto& x = a.value();
  Matrix<S> v(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mx = x.row(r).maxCoeff();
    const S lse = mx + std::log((x.row(r).array() - mx).exp().sum());
    v.row(r) = x.row(r).array() - lse;
  }
  const std::size_t out = g->size();
  return g->add_node(std::move(v), g->needs_grad(a.id), [g, ia = a.id, out](const Matrix<S>& d) {
    const auto& y = g->value(out);
    Matrix<S> p = y.array().exp().matrix();
    Matrix<S> r = d - (p.array().colwise() * d.rowwise().sum().array()).matrix();
    g->accumulate(ia, r);
  });
}

template <typename S>
Expr<S> softmax(Expr<S> a) {
  Graph<S>* g = a.graph;
  const auto& x = a.value();
  Matrix<S> v(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mx = x.row(r).maxCoeff();
    auto e = (x.row(r).array() - mx).exp();
    v.row(r) = e / e.sum();
  }
  const std::size_t out = g->size();
  return g->add_node(std::move(v), g->needs_grad(a.id), [g, ia = a.id, out](const Matrix<S>& d) {
    const auto& y = g->value(out);
    Matrix<S> dot = d.cwiseProduct(y).rowwise().sum();
    Matrix<S> r = (y.array() * (d.array().colwise() - dot.col(0).array())).matrix();
    g->accumulate(ia, r);
  });
}

// out[b, :] = a[b, :] * c[b, 0]
template <typename S>
Expr<S> mul_col(Expr<S> a, Expr<S> c) {
  detail::require_same_graph(a, c);
  if (c.cols() != 1 || c.rows() != a.rows()) throw std::invalid_argument("mul_col: column shape mismatch");
  Graph<S>* g = a.graph;
  const bool ng = g->needs_grad(a.id) || g->needs_grad(c.id);
  Matrix<S> v = (a.value().array().colwise() * c.value().col(0).array()).matrix();
  return g->add_node(std::move(v), ng, [g, ia = a.id, ic = c.id](const Matrix<S>& d) {
    if (g->needs_grad(ia)) g->accumulate(ia, (d.array().colwise() * g->value(ic).col(0).array()).matrix());
    if (g->needs_grad(ic)) g->accumulate(ic, d.cwiseProduct(g->value(ia)).rowwise().sum());
  });
}

// out[b, 0] = <a[b, :], b[b, :]>
template <typename S>
Expr<S> row_dot(Expr<S> a, Expr<S> b) {
  detail::require_same_shape(a, b, "row_dot");
  Graph<S>* g = a.graph;
  const bool ng = g->needs_grad(a.id) || g->needs_grad(b.id);
  Matrix<S> v = a.value().cwiseProduct(b.value()).rowwise().sum();
  return g->add_node(std::move(v), ng, [g, ia = a.id, ib = b.id](const Matrix<S>& d) {
    if (g->needs_grad(ia)) g->accumulate(ia, (g->value(ib).array().colwise() * d.col(0).array()).matrix());
    if (g->needs_grad(ib)) g->accumulate(ib, (g->value(ia).array().colwise() * d.col(0).array()).matrix());
  });
}

template <typename S>
Expr<S> sum_all(Expr<S> a) {
  Graph<S>* g = a.graph;
  Matrix<S> v(1, 1);
  v(0, 0) = a.value().sum();
  return g->add_node(std::move(v), g->needs_grad(a.id), [g, ia = a.id, r = a.rows(), c = a.cols()](const Matrix<S>& d) {
    g->accumulate(ia, Matrix<S>::Constant(r, c, d(0, 0)));
  });
}

// Σ_b weight[b] · a[b, index[b]]; rows with weight 0 are skipped.
template <typename S>
Expr<S> pick_sum(Expr<S> a, std::span<const int> index, std::span<const S> weight) {
  if (static_cast<Eigen::Index>(index.size()) != a.rows() || weight.size() != index.size()) {
    throw std::invalid_argument("pick_sum: index/weight size must equal row count");
  }
  Graph<S>* g = a.graph;
  Matrix<S> v = Matrix<S>::Zero(1, 1);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if (weight[r] == S(0)) continue;
    if (index[r] < 0 || index[r] >= a.cols()) throw std::out_of_range("pick_sum: index out of range");
    v(0, 0) += weight[r] * a.value()(r, index[r]);
  }
  std::vector<int> idx(index.begin(), index.end());
  std::vector<S> w(weight.begin(), weight.end());
  return g->add_node(std::move(v), g->needs_grad(a.id),
                     [g, ia = a.id, idx = std::move(idx), w = std::move(w)](const Matrix<S>& d) {
                       auto& grad = g->grad_buffer(ia);
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         if (w[i] != S(0)) grad(static_cast<Eigen::Index>(i), idx[i]) += w[i] * d(0, 0);
                       }
                     });
}

// Gathers rows of a table (embedding lookup).
template <typename S>
Expr<S> lookup(Expr<S> table, std::span<const int> ids) {
  Graph<S>* g = table.graph;
  const auto& t = table.value();
  Matrix<S> v(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) throw std::out_of_range("lookup: id out of range");
    v.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return g->add_node(std::move(v), g->needs_grad(table.id),
                     [g, it = table.id, idv = std::move(idv)](const Matrix<S>& d) {
                       auto& grad = g->grad_buffer(it);
                       for (std::size_t i = 0; i < idv.size(); ++i) grad.row(idv[i]) += d.row(static_cast<Eigen::Index>(i));
                     });
}

// Encoder memory is stored as one B x (T·H) matrix: block t holds the
// states of position t. These three ops read it without splitting.

// scores[b, t] = <q[b, :], memory[b, block t]>
template <typename S>
Expr<S> block_dot(Expr<S> q, Expr<S> memory, Eigen::Index blocks) {
  detail::require_same_graph(q, memory);
  const Eigen::Index h = q.cols();
  if (memory.cols() != h * blocks || memory.rows() != q.rows()) throw std::invalid_argument("block_dot: shape mismatch");
  Graph<S>* g = q.graph;
  const bool ng = g->needs_grad(q.id) || g->needs_grad(memory.id);
  Matrix<S> v(q.rows(), blocks);
  for (Eigen::Index t = 0; t < blocks; ++t) {
    v.col(t) = q.value().cwiseProduct(memory.value().middleCols(t * h, h)).rowwise().sum();
  }
  return g->add_node(std::move(v), ng, [g, iq = q.id, im = memory.id, blocks, h](const Matrix<S>& d) {
    const auto& qv = g->value(iq);
    const auto& mv = g->value(im);
    if (g->needs_grad(iq)) {
      Matrix<S> gq = Matrix<S>::Zero(qv.rows(), h);
      for (Eigen::Index t = 0; t < blocks; ++t) gq += (mv.middleCols(t * h, h).array().colwise() * d.col(t).array()).matrix();
      g->accumulate(iq, gq);
    }
    if (g->needs_grad(im)) {
      auto& gm = g->grad_buffer(im);
      for (Eigen::Index t = 0; t < blocks; ++t) gm.middleCols(t * h, h) += (qv.array().colwise() * d.col(t).array()).matrix();
    }
  });
}

// out[b, :] = Σ_t weights[b, t] · memory[b, block t]
template <typename S>
Expr<S> block_weighted_sum(Expr<S> weights, Expr<S> memory, Eigen::Index blocks) {
  detail::require_same_graph(weights, memory);
  if (weights.cols() != blocks || memory.cols() % blocks != 0 || memory.rows() != weights.rows()) {
    throw std::invalid_argument("block_weighted_sum: shape mismatch");
  }
  const Eigen::Index h = memory.cols() / blocks;
  Graph<S>* g = weights.graph;
  const bool ng = g->needs_grad(weights.id) || g->needs_grad(memory.id);
  Matrix<S> v = Matrix<S>::Zero(weights.rows(), h);
  for (Eigen::Index t = 0; t < blocks; ++t) {
    v += (memory.value().middleCols(t * h, h).array().colwise() * weights.value().col(t).array()).matrix();
  }
  return g->add_node(std::move(v), ng, [g, iw = weights.id, im = memory.id, blocks, h](const Matrix<S>& d) {
    const auto& wv = g->value(iw);
    const auto& mv = g->value(im);
    if (g->needs_grad(iw)) {
      Matrix<S> gw(wv.rows(), blocks);
      for (Eigen::Index t = 0; t < blocks; ++t) gw.col(t) = d.cwiseProduct(mv.middleCols(t * h, h)).rowwise().sum();
      g->accumulate(iw, gw);
    }
    if (g->needs_grad(im)) {
      auto& gm = g->grad_buffer(im);
      for (Eigen::Index t = 0; t < blocks; ++t) gm.middleCols(t * h, h) += (d.array().colwise() * wv.col(t).array()).matrix();
    }
  });
}

// out[b, :] = memory[b, block position[b]]
template <typename S>
Expr<S> select_block(Expr<S> memory, std::span<const int> position, Eigen::Index blocks) {
  if (static_cast<Eigen::Index>(position.size()) != memory.rows() || memory.cols() % blocks != 0) {
    throw std::invalid_argument("select_block: shape mismatch");
  }
  const Eigen::Index h = memory.cols() / blocks;
  Graph<S>* g = memory.graph;
  Matrix<S> v(memory.rows(), h);
  for (Eigen::Index b = 0; b < memory.rows(); ++b) {
    if (position[b] < 0 || position[b] >= blocks) throw std::out_of_range("select_block: position out of range");
    v.row(b) = memory.value().row(b).segment(position[b] * h, h);
  }
  std::vector<int> pos(position.begin(), position.end());
  return g->add_node(std::move(v), g->needs_grad(memory.id), [g, im = memory.id, pos = std::move(pos), h](const Matrix<S>& d) {
    auto& gm = g->grad_buffer(im);
    for (std::size_t b = 0; b < pos.size(); ++b) {
      gm.row(static_cast<Eigen::Index>(b)).segment(pos[b] * h, h) += d.row(static_cast<Eigen::Index>(b));
    }
  });
}

}  // namespace crayon::nn
