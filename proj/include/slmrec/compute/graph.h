// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "slmrec/compute/tensor.h"

namespace slmrec {

template <typename T>
class Graph;

// Handle to a node recorded on a Graph.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr && id >= 0; }
  const Tensor<T>& value() const { return graph->value(*this); }
  const Shape& shape() const { return value().shape(); }
};

// Tape of primitive applications for reverse-mode differentiation. Nodes
// are appended in execution order, which is a topological order; backward()
// walks them once in reverse.
template <typename T>
class Graph {
 public:
  // Receives the node's output value and its accumulated gradient and adds
  // contributions into the gradients of its inputs.
  using BackwardFn =
      std::function<void(Graph&, const Tensor<T>& out, const Tensor<T>& grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // With gradients disabled nothing requires grad and no closures are kept.
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

  void set_check_finite(bool check) { check_finite_ = check; }

  Var<T> constant(Tensor<T> value) {
    return push(Node{"constant", std::move(value), nullptr, false, {}, {}});
  }

  // Binds an externally owned tensor without copying it. The tensor must
  // outlive the graph and must not change while the graph is alive.
  Var<T> parameter(const Tensor<T>& external, bool requires_grad = true) {
    return push(Node{"parameter", Tensor<T>(), &external,
                     requires_grad && grad_enabled_, {}, {}});
  }

  Var<T> record(const char* op, Tensor<T> value,
                std::initializer_list<Var<T>> inputs, BackwardFn backward) {
    if (check_finite_ && !value.all_finite()) {
      throw NumericError(std::string("non-finite output from ") + op);
    }
    Node node{op, std::move(value), nullptr, false, {}, {}};
    if (grad_enabled_) {
      for (const Var<T>& in : inputs) {
        node.inputs.push_back(in.id);
        node.requires_grad = node.requires_grad || requires_grad(in);
      }
      if (node.requires_grad) {
        node.backward = std::move(backward);
      }
    }
    return push(std::move(node));
  }

  const Tensor<T>& value(Var<T> v) const { return nodes_.at(index(v)).get(); }
  bool requires_grad(Var<T> v) const { return nodes_.at(index(v)).requires_grad; }
  const char* op_name(Var<T> v) const { return nodes_.at(index(v)).op; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient accumulated for v by the last backward(), or nullptr.
  const Tensor<T>* grad(Var<T> v) const {
    const std::size_t i = index(v);
    if (i >= grads_.size() || grads_[i].empty()) {
      return nullptr;
    }
    return &grads_[i];
  }

  // Zero-initialised gradient buffer for v; backward closures add into it.
  Tensor<T>& grad_buffer(Var<T> v) {
    const std::size_t i = index(v);
    if (grads_[i].empty()) {
      grads_[i] = Tensor<T>(nodes_[i].get().shape());
    }
    return grads_[i];
  }

  void backward(Var<T> root) {
    const std::size_t r = index(root);
    if (value(root).numel() != 1) {
      throw DimensionError("backward root must be a scalar, got " +
                           shape_string(value(root).shape()));
    }
    grads_.assign(nodes_.size(), Tensor<T>());
    if (!nodes_[r].requires_grad) {
      return;
    }
    grads_[r] = Tensor<T>(value(root).shape(), T(1));
    for (std::size_t i = r + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.backward || grads_[i].empty()) {
        continue;
      }
      node.backward(*this, node.get(), grads_[i]);
    }
  }

 private:
  struct Node {
    const char* op;
    Tensor<T> owned;
    const Tensor<T>* external;
    bool requires_grad;
    std::vector<int> inputs;
    BackwardFn backward;

    const Tensor<T>& get() const { return external ? *external : owned; }
  };

  Var<T> push(Node node) {
    nodes_.push_back(std::move(node));
    return Var<T>{this, static_cast<int>(nodes_.size() - 1)};
  }

  std::size_t index(Var<T> v) const {
    if (v.graph != this || v.id < 0 ||
        static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw IndexError("variable does not belong to this graph");
    }
    return static_cast<std::size_t>(v.id);
  }

  std::deque<Node> nodes_;  // stable storage; growth never copies tensors
  std::vector<Tensor<T>> grads_;
  bool grad_enabled_ = true;
  bool check_finite_ = true;
};

}  // namespace slmrec
