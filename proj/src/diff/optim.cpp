// SPDX-License-Identifier: Apache-2.0
#include "faders/diff/optim.hpp"

#include <algorithm>
#include <cmath>

#include "faders/diff/rng.hpp"
#include "faders/error.hpp"

namespace faders::diff {

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
  if (state.first_moment.size() != params.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (auto* p : params) {
      state.first_moment.emplace_back(p->value.shape);
      state.second_moment.emplace_back(p->value.shape);
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value.data;
    const auto& grad = params[i]->grad.data;
    auto& m = state.first_moment[i].data;
    auto& v = state.second_moment[i].data;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      const double vk = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double m_hat = mk / bc1;
      const double v_hat = vk / bc2;
      value[k] = static_cast<T>(value[k] - state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon));
    }
  }
}

template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params) {
    for (T g : p->grad.data) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const auto s = static_cast<T>(max_norm / norm);
    for (auto* p : params) {
      for (T& g : p->grad.data) g *= s;
    }
  }
  return norm;
}

namespace {

// Central differences on `ref` (same graph, possibly wider type) against the
// analytic gradients already accumulated in `params`.
template <typename R>
double central_difference(Parameter<R>& p, std::size_t k, const std::function<Var<R>(Tape<R>&)>& fn, double epsilon) {
  auto evaluate = [&] {
    Tape<R> tape(false);
    return tape.value(fn(tape)).item();
  };
  const R h = static_cast<R>(epsilon);
  const R saved = p.value.data[k];
  p.value.data[k] = saved + h;
  const R up = evaluate();
  p.value.data[k] = saved - h;
  const R down = evaluate();
  p.value.data[k] = saved;
  return static_cast<double>((up - down) / (2 * h));
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

// `numeric(i, k)` yields the finite-difference estimate for coordinate k of params[i].
GradCheckResult compare_gradients(std::span<Parameter<double>* const> params,
                                  const std::function<double(std::size_t, std::size_t)>& numeric,
                                  std::size_t samples_per_param, std::uint64_t seed) {
  auto gen = SeedSequence(seed).stream("grad_check");
  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    const std::size_t n = p->value.size();
    std::vector<std::size_t> coords(n);
    for (std::size_t k = 0; k < n; ++k) coords[k] = k;
    if (n > samples_per_param) {
      shuffle(coords.begin(), coords.end(), gen);
      coords.resize(samples_per_param);
    }
    for (std::size_t k : coords) {
      const double err = relative_error(p->grad.data[k], numeric(i, k));
      ++result.coordinates;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst = p->name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return result;
}

void analytic_gradients(const std::function<Var<double>(Tape<double>&)>& loss_fn,
                        std::span<Parameter<double>* const> params) {
  for (auto* p : params) p->zero_grad();
  Tape<double> tape;
  auto loss = loss_fn(tape);
  tape.backward(loss);
}

}  // namespace

GradCheckResult grad_check(const std::function<Var<double>(Tape<double>&)>& loss_fn,
                           std::span<Parameter<double>* const> params, double epsilon,
                           std::size_t samples_per_param, std::uint64_t seed) {
  analytic_gradients(loss_fn, params);
  return compare_gradients(
      params, [&](std::size_t i, std::size_t k) { return central_difference(*params[i], k, loss_fn, epsilon); },
      samples_per_param, seed);
}

GradCheckResult grad_check(const std::function<Var<double>(Tape<double>&)>& loss_fn,
                           std::span<Parameter<double>* const> params,
                           const std::function<Var<long double>(Tape<long double>&)>& reference_fn,
                           std::span<Parameter<long double>* const> reference_params, double epsilon,
                           std::size_t samples_per_param, std::uint64_t seed, double refine_above) {
  if (reference_params.size() != params.size()) {
    throw Error(ErrorCode::ShapeError, "grad_check: reference has " + std::to_string(reference_params.size()) +
                                           " parameters, expected " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (reference_params[i]->value.size() != params[i]->value.size()) {
      throw Error(ErrorCode::ShapeError, "grad_check: reference shape of " + params[i]->name);
    }
  }
  analytic_gradients(loss_fn, params);
  return compare_gradients(
      params,
      [&](std::size_t i, std::size_t k) {
        const double coarse = central_difference(*params[i], k, loss_fn, epsilon);
        if (relative_error(params[i]->grad.data[k], coarse) <= refine_above) return coarse;
        return central_difference(*reference_params[i], k, reference_fn, epsilon);
      },
      samples_per_param, seed);
}

template void adam_step(std::span<Parameter<float>* const>, AdamState<float>&);
template void adam_step(std::span<Parameter<double>* const>, AdamState<double>&);
template double clip_grad_norm(std::span<Parameter<float>* const>, double);
template double clip_grad_norm(std::span<Parameter<double>* const>, double);

}  // namespace faders::diff
