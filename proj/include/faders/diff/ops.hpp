// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Matrices are [rows, cols]; "rows" is the batch
// axis wherever an op has one. A [1, n] operand broadcasts over rows where
// noted.
#pragma once

#include <span>
#include <vector>

#include "faders/diff/tape.hpp"

namespace faders::diff {

template <typename T>
Var<T> matmul(Tape<T>& t, Var<T> a, Var<T> b);
// x [B, in] * W [in, out] + b [1, out]
template <typename T>
Var<T> affine(Tape<T>& t, Var<T> x, Var<T> w, Var<T> b);

template <typename T>
Var<T> add(Tape<T>& t, Var<T> a, Var<T> b);  // b may be [1, n]
template <typename T>
Var<T> sub(Tape<T>& t, Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Tape<T>& t, Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Tape<T>& t, Var<T> a, T s);
template <typename T>
Var<T> add_scalar(Tape<T>& t, Var<T> a, T s);

template <typename T>
Var<T> sigmoid(Tape<T>& t, Var<T> a);
template <typename T>
Var<T> tanh(Tape<T>& t, Var<T> a);
template <typename T>
Var<T> exp(Tape<T>& t, Var<T> a);

template <typename T>
Var<T> sum_all(Tape<T>& t, Var<T> a);
template <typename T>
Var<T> mean_all(Tape<T>& t, Var<T> a);
template <typename T>
Var<T> row_sum(Tape<T>& t, Var<T> a);  // [B, n] -> [B, 1]

template <typename T>
Var<T> concat_cols(Tape<T>& t, const std::vector<Var<T>>& parts);
template <typename T>
Var<T> stack_rows(Tape<T>& t, const std::vector<Var<T>>& parts);
template <typename T>
Var<T> column(Tape<T>& t, Var<T> a, std::size_t j);  // [B, n] -> [B, 1]
template <typename T>
Var<T> gather_cols(Tape<T>& t, Var<T> a, std::span<const int> index);  // a[b, index[b]] -> [B, 1]

template <typename T>
Var<T> softmax_rows(Tape<T>& t, Var<T> a);
template <typename T>
Var<T> log_softmax_rows(Tape<T>& t, Var<T> a);

// Rows of `table` selected by ids: [V, E] -> [B, E].
template <typename T>
Var<T> embedding(Tape<T>& t, Var<T> table, std::span<const int> ids);

// Mean negative log-likelihood over rows whose target is >= 0; rows with a
// negative target are ignored. Throws IndexError for targets >= classes.
template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& t, Var<T> logits, std::span<const int> targets);

// z = mu + exp(log_sigma) * noise
template <typename T>
Var<T> gaussian_sample(Tape<T>& t, Var<T> mu, Var<T> log_sigma, const Tensor<T>& noise);

// Per-row KL(N(mu_q, sigma_q^2) || N(mu_p, sigma_p^2)) summed over columns,
// [B, 1]. mu_p may be [1, Z] (broadcast) or [B, Z].
template <typename T>
Var<T> kl_rows(Tape<T>& t, Var<T> mu_q, Var<T> log_sigma_q, Var<T> mu_p, T sigma_p);

// Batch mean of kl_rows.
template <typename T>
Var<T> kl_diag_gaussians(Tape<T>& t, Var<T> mu_q, Var<T> log_sigma_q, Var<T> mu_p, T sigma_p);

// log p(c_k) + log N(z; means[k], variance * I), [B, K]; uniform p(c).
template <typename T>
Var<T> mixture_log_joint(Tape<T>& t, Var<T> z, Var<T> means, T variance);

// mean over all B^2 entries of (tanh(z_i - z_j) - sign(y_i - y_j))^2.
// z is [B, 1]; throws BatchTooSmall for B < 2.
template <typename T>
Var<T> latent_reg_loss(Tape<T>& t, Var<T> z, std::span<const double> y);

}  // namespace faders::diff
