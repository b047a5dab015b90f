// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "faders/diff/ops.hpp"

namespace faders::diff {

// Owns parameters at stable addresses; layers keep raw pointers into it.
template <typename T>
class ParameterStore {
 public:
  Parameter<T>& add(std::string name, Tensor<T> value) {
    params_.emplace_back(std::move(name), std::move(value));
    return params_.back();
  }
  std::deque<Parameter<T>>& all() { return params_; }
  const std::deque<Parameter<T>>& all() const { return params_; }
  Parameter<T>* find(const std::string& name);
  std::vector<Parameter<T>*> pointers();
  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

 private:
  std::deque<Parameter<T>> params_;
};

// Glorot/Xavier uniform.
template <typename T>
Tensor<T> xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& gen);

template <typename T>
struct Linear {
  Parameter<T>* weight = nullptr;  // [in, out]
  Parameter<T>* bias = nullptr;    // [1, out]

  static Linear create(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                       std::mt19937_64& gen);
  Var<T> operator()(Tape<T>& t, Var<T> x) const { return affine(t, x, t.param(*weight), t.param(*bias)); }
  RowMatrix<T> forward(const RowMatrix<T>& x) const;
  std::size_t in() const { return weight->value.rows(); }
  std::size_t out() const { return weight->value.cols(); }
};

// Gate blocks are stored side by side: W = [W_r | W_z | W_n] ([in, 3H]),
// U = [U_r | U_z | U_n] ([H, 3H]), b = [b_r | b_z | b_n] ([1, 3H]).
//   r  = sigmoid(x W_r + h U_r + b_r)
//   u  = sigmoid(x W_z + h U_z + b_z)
//   n  = tanh(x W_n + r * (h U_n) + b_n)
//   h' = (1 - u) * n + u * h
template <typename T>
struct GruCell {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Parameter<T>* w = nullptr;
  Parameter<T>* u = nullptr;
  Parameter<T>* b = nullptr;

  static GruCell create(ParameterStore<T>& store, const std::string& name, std::size_t input_size,
                        std::size_t hidden_size, std::mt19937_64& gen);
};

// Differentiable GRU step. Rows with mask == 0 carry h through unchanged
// (padding); an empty mask updates every row. Throws ShapeError.
template <typename T>
Var<T> gru_step(Tape<T>& t, const GruCell<T>& cell, Var<T> x, Var<T> h, std::span<const T> mask = {});

// Plain forward step for inference paths.
template <typename T>
RowMatrix<T> gru_forward(const GruCell<T>& cell, const RowMatrix<T>& x, const RowMatrix<T>& h);

// Tensor-level convenience matching the tape op.
template <typename T>
Tensor<T> gru_step(const GruCell<T>& cell, const Tensor<T>& x, const Tensor<T>& h);

}  // namespace faders::diff
