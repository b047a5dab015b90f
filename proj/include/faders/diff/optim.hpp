// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "faders/diff/tape.hpp"

namespace faders::diff {

template <typename T>
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
};

// Bias-corrected Adam update using each parameter's accumulated gradient.
// Moments are allocated on the first call; parameter order must be stable.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "<param>[index]"
};

// Compares reverse-mode gradients against central finite differences on up
// to `samples_per_param` coordinates of each parameter. The error of a
// coordinate is |g_a - g_n| / max(1e-8, |g_a| + |g_n|).
GradCheckResult grad_check(const std::function<Var<double>(Tape<double>&)>& loss_fn,
                           std::span<Parameter<double>* const> params, double epsilon = 1e-5,
                           std::size_t samples_per_param = 16, std::uint64_t seed = 0);

// Same comparison, except that a coordinate whose double-precision error
// exceeds `refine_above` is re-differenced on an extended-precision replica of
// the graph and judged by that estimate; `reference_params` mirror `params`
// one to one. Keeps difference roundoff below gradients that are tiny next to
// the loss value.
GradCheckResult grad_check(const std::function<Var<double>(Tape<double>&)>& loss_fn,
                           std::span<Parameter<double>* const> params,
                           const std::function<Var<long double>(Tape<long double>&)>& reference_fn,
                           std::span<Parameter<long double>* const> reference_params, double epsilon = 1e-5,
                           std::size_t samples_per_param = 16, std::uint64_t seed = 0, double refine_above = 1e-6);

}  // namespace faders::diff
