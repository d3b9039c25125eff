#pragma once

// Dynamic reverse-mode computation graph over row-major matrices.
//
// Rows index batch examples, columns index features. A Graph is built
// fresh for every forward pass; calling backward() on a 1x1 node
// accumulates gradients into every Parameter that took part.

#include <Eigen/Dense>

#include <cassert>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace crayon::nn {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
struct Parameter {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<S> v) : name(std::move(n)), value(std::move(v)) {
    grad = Matrix<S>::Zero(value.rows(), value.cols());
  }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename S>
class Graph;

template <typename S>
struct Expr {
  Graph<S>* graph = nullptr;
  std::size_t id = 0;

  const Matrix<S>& value() const { return graph->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  S scalar() const { return value()(0, 0); }
};

template <typename S>
class Graph {
 public:
  Graph() { nodes_.reserve(1024); }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr<S> constant(Matrix<S> v) { return add_node(std::move(v), false, {}); }

  Expr<S> scalar(S v) {
    Matrix<S> m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
  }

  // The same Parameter always maps to one leaf node within a graph.
  Expr<S> param(Parameter<S>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return {this, it->second};
    Expr<S> e = add_node(p.value, track_grads_, {});
    nodes_[e.id].param = &p;
    param_nodes_.emplace(&p, e.id);
    return e;
  }

  // Disables gradient bookkeeping for every node created afterwards.
  void set_track_gradients(bool on) { track_grads_ = on; }
  bool track_gradients() const { return track_grads_; }

  const Matrix<S>& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Creates a node whose gradient callback receives (output grad).
  Expr<S> add_node(Matrix<S> v, bool needs_grad, std::function<void(const Matrix<S>&)> backward) {
    Node n;
    n.value = std::move(v);
    n.needs_grad = needs_grad && track_grads_;
    if (n.needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Zero-initialized gradient storage, for ops that scatter into part of an input.
  Matrix<S>& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Matrix<S>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void backward(Expr<S> loss) {
    if (loss.graph != this) throw std::invalid_argument("backward: expression from another graph");
    if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("backward: loss must be 1x1");
    if (!nodes_[loss.id].needs_grad) return;
    nodes_[loss.id].grad = Matrix<S>::Ones(1, 1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.size() == 0) continue;
      if (n.backward) n.backward(n.grad);
      if (n.param != nullptr) n.param->grad += n.grad;
    }
  }

 private:
  struct Node {
    Matrix<S> value;
    Matrix<S> grad;
    std::function<void(const Matrix<S>&)> backward;
    Parameter<S>* param = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<S>*, std::size_t> param_nodes_;
  bool track_grads_ = true;
};

}  // namespace crayon::nn
