// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "faders/diff/tensor.hpp"

namespace faders::diff {

template <typename T>
class Tape;

template <typename T>
struct Var {
  std::uint32_t id = 0;
};

// Reverse-mode tape over dense tensors. Nodes are appended in evaluation
// order; backward() replays them in reverse. Parameter leaves alias the
// parameter storage and flush their gradient into Parameter::grad.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var<T> constant(Tensor<T> value) {
    Node n;
    n.value = std::move(value);
    return append(std::move(n));
  }

  // One leaf per parameter per tape.
  Var<T> param(Parameter<T>& p) {
    if (auto it = param_leaf_.find(&p); it != param_leaf_.end()) return it->second;
    Node n;
    n.external = &p.value;
    n.param = &p;
    n.requires_grad = record_;
    auto v = append(std::move(n));
    param_leaf_.emplace(&p, v);
    return v;
  }

  // Appends an op result. `backward` is kept only when some input needs grad.
  Var<T> push(Tensor<T> value, std::initializer_list<Var<T>> inputs, Backward backward) {
    return push(std::move(value), std::vector<Var<T>>(inputs), std::move(backward));
  }
  Var<T> push(Tensor<T> value, const std::vector<Var<T>>& inputs, Backward backward) {
    Node n;
    n.value = std::move(value);
    if (record_) {
      for (auto in : inputs) n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
      if (n.requires_grad) n.backward = std::move(backward);
    }
    return append(std::move(n));
  }

  const Tensor<T>& value(Var<T> v) const {
    const Node& n = nodes_[v.id];
    return n.external != nullptr ? *n.external : n.value;
  }

  bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }

  // Gradient buffer, allocated as zeros on first access.
  Tensor<T>& grad(Var<T> v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Tensor<T>(value(v).shape);
    return n.grad;
  }

  // Seeds d(root)/d(root) = 1 for a scalar root and accumulates into every
  // parameter reached.
  void backward(Var<T> root) {
    if (value(root).size() != 1) throw Error(ErrorCode::ShapeError, "backward needs a scalar root");
    if (!requires_grad(root)) return;
    grad(root).data[0] = T(1);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) {
        n.backward(*this);
      } else if (n.param != nullptr) {
        auto& pg = n.param->grad.data;
        for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad.data[k];
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* external = nullptr;
    Parameter<T>* param = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var<T> append(Node&& n) {
    nodes_.push_back(std::move(n));
    return Var<T>{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, Var<T>> param_leaf_;
};

}  // namespace faders::diff
