// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "faders/error.hpp"

namespace faders::diff {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Buffers start on a SIMD packet boundary so vectorized kernels take the same
// path, and produce the same bits, on every run.
template <typename T>
using Storage = std::vector<T, Eigen::aligned_allocator<T>>;

// Dense row-major tensor. Most operations treat it as a matrix with
// rows() = shape[0] and cols() = product of the remaining extents.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  Storage<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> extents, T fill = T(0))
      : shape(std::move(extents)), data(count(shape), fill) {}

  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T(0)) { return Tensor({rows, cols}, fill); }
  static Tensor scalar(T v) { return Tensor({1, 1}, v); }

  static std::size_t count(const std::vector<std::size_t>& extents) {
    return std::accumulate(extents.begin(), extents.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.empty() ? 0 : (shape[0] == 0 ? 0 : data.size() / shape[0]); }

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  T item() const { return data.at(0); }

  MatrixMap<T> mat() {
    return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
  }
  ConstMatrixMap<T> mat() const {
    return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
  }

  bool same_shape(const Tensor& o) const { return rows() == o.rows() && cols() == o.cols(); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeError, std::string(op) + ": [" + std::to_string(a.rows()) + "," +
                                           std::to_string(a.cols()) + "] vs [" + std::to_string(b.rows()) +
                                           "," + std::to_string(b.cols()) + "]");
  }
}

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape) {}
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), T(0)); }
};

}  // namespace faders::diff
