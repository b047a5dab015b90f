// SPDX-License-Identifier: Apache-2.0
#include "faders/diff/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace faders::diff {

namespace {

template <typename T>
Tensor<T> zeros_like(const Tensor<T>& a) {
  return Tensor<T>(a.shape);
}

template <typename T>
Tensor<T> matrix(std::size_t r, std::size_t c) {
  return Tensor<T>::matrix(r, c);
}

template <typename T>
bool broadcast_row(const Tensor<T>& a, const Tensor<T>& b) {
  return b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols();
}

template <typename T>
void check_binary(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b) && !broadcast_row(a, b)) require_same_shape(a, b, op);
}

}  // namespace

template <typename T>
Var<T> matmul(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.cols() != B.rows()) {
    throw Error(ErrorCode::ShapeError, "matmul: inner extents " + std::to_string(A.cols()) + " vs " +
                                           std::to_string(B.rows()));
  }
  Tensor<T> C = matrix<T>(A.rows(), B.cols());
  C.mat().noalias() = A.mat() * B.mat();
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(C), {a, b}, [a, b, out](Tape<T>& tp) {
    const auto& dC = tp.grad(out);
    if (tp.requires_grad(a)) tp.grad(a).mat().noalias() += dC.mat() * tp.value(b).mat().transpose();
    if (tp.requires_grad(b)) tp.grad(b).mat().noalias() += tp.value(a).mat().transpose() * dC.mat();
  });
}

template <typename T>
Var<T> affine(Tape<T>& t, Var<T> x, Var<T> w, Var<T> b) {
  const auto& X = t.value(x);
  const auto& W = t.value(w);
  const auto& Bv = t.value(b);
  if (X.cols() != W.rows() || Bv.rows() != 1 || Bv.cols() != W.cols()) {
    throw Error(ErrorCode::ShapeError, "affine: x [" + std::to_string(X.rows()) + "," + std::to_string(X.cols()) +
                                           "] W [" + std::to_string(W.rows()) + "," + std::to_string(W.cols()) +
                                           "]");
  }
  Tensor<T> Y = matrix<T>(X.rows(), W.cols());
  Y.mat().noalias() = X.mat() * W.mat();
  Y.mat().rowwise() += Bv.mat().row(0);
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {x, w, b}, [x, w, b, out](Tape<T>& tp) {
    const auto& dY = tp.grad(out);
    if (tp.requires_grad(x)) tp.grad(x).mat().noalias() += dY.mat() * tp.value(w).mat().transpose();
    if (tp.requires_grad(w)) tp.grad(w).mat().noalias() += tp.value(x).mat().transpose() * dY.mat();
    if (tp.requires_grad(b)) tp.grad(b).mat().row(0) += dY.mat().colwise().sum();
  });
}

template <typename T>
Var<T> add(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  check_binary(A, B, "add");
  const bool bc = broadcast_row(A, B);
  Tensor<T> C = A;
  if (bc) {
    C.mat().rowwise() += B.mat().row(0);
  } else {
    C.mat() += B.mat();
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(C), {a, b}, [a, b, out, bc](Tape<T>& tp) {
    const auto& dC = tp.grad(out);
    if (tp.requires_grad(a)) tp.grad(a).mat() += dC.mat();
    if (tp.requires_grad(b)) {
      if (bc) {
        tp.grad(b).mat().row(0) += dC.mat().colwise().sum();
      } else {
        tp.grad(b).mat() += dC.mat();
      }
    }
  });
}

template <typename T>
Var<T> sub(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  check_binary(A, B, "sub");
  const bool bc = broadcast_row(A, B);
  Tensor<T> C = A;
  if (bc) {
    C.mat().rowwise() -= B.mat().row(0);
  } else {
    C.mat() -= B.mat();
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(C), {a, b}, [a, b, out, bc](Tape<T>& tp) {
    const auto& dC = tp.grad(out);
    if (tp.requires_grad(a)) tp.grad(a).mat() += dC.mat();
    if (tp.requires_grad(b)) {
      if (bc) {
        tp.grad(b).mat().row(0) -= dC.mat().colwise().sum();
      } else {
        tp.grad(b).mat() -= dC.mat();
      }
    }
  });
}

template <typename T>
Var<T> mul(Tape<T>& t, Var<T> a, Var<T> b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  require_same_shape(A, B, "mul");
  Tensor<T> C = A;
  C.mat().array() *= B.mat().array();
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(C), {a, b}, [a, b, out](Tape<T>& tp) {
    const auto& dC = tp.grad(out);
    if (tp.requires_grad(a)) tp.grad(a).mat().array() += dC.mat().array() * tp.value(b).mat().array();
    if (tp.requires_grad(b)) tp.grad(b).mat().array() += dC.mat().array() * tp.value(a).mat().array();
  });
}

template <typename T>
Var<T> scale(Tape<T>& t, Var<T> a, T s) {
  Tensor<T> C = t.value(a);
  C.mat() *= s;
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(C), {a}, [a, out, s](Tape<T>& tp) { tp.grad(a).mat() += s * tp.grad(out).mat(); });
}

template <typename T>
Var<T> add_scalar(Tape<T>& t, Var<T> a, T s) {
  Tensor<T> C = t.value(a);
  C.mat().array() += s;
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(C), {a}, [a, out](Tape<T>& tp) { tp.grad(a).mat() += tp.grad(out).mat(); });
}

template <typename T>
Var<T> sigmoid(Tape<T>& t, Var<T> a) {
  Tensor<T> Y = t.value(a);
  for (auto& v : Y.data) v = T(1) / (T(1) + std::exp(-v));
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {a}, [a, out](Tape<T>& tp) {
    const auto ym = tp.value(out).mat();
    tp.grad(a).mat().array() += tp.grad(out).mat().array() * ym.array() * (T(1) - ym.array());
  });
}

template <typename T>
Var<T> tanh(Tape<T>& t, Var<T> a) {
  Tensor<T> Y = t.value(a);
  for (auto& v : Y.data) v = std::tanh(v);
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {a}, [a, out](Tape<T>& tp) {
    const auto ym = tp.value(out).mat();
    tp.grad(a).mat().array() += tp.grad(out).mat().array() * (T(1) - ym.array().square());
  });
}

template <typename T>
Var<T> exp(Tape<T>& t, Var<T> a) {
  Tensor<T> Y = t.value(a);
  for (auto& v : Y.data) v = std::exp(v);
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {a}, [a, out](Tape<T>& tp) {
    tp.grad(a).mat().array() += tp.grad(out).mat().array() * tp.value(out).mat().array();
  });
}

template <typename T>
Var<T> sum_all(Tape<T>& t, Var<T> a) {
  const T s = t.value(a).mat().sum();
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(Tensor<T>::scalar(s), {a}, [a, out](Tape<T>& tp) {
    tp.grad(a).mat().array() += tp.grad(out).data[0];
  });
}

template <typename T>
Var<T> mean_all(Tape<T>& t, Var<T> a) {
  const auto n = static_cast<T>(t.value(a).size());
  return scale(t, sum_all(t, a), T(1) / n);
}

template <typename T>
Var<T> row_sum(Tape<T>& t, Var<T> a) {
  const auto& A = t.value(a);
  Tensor<T> Y = matrix<T>(A.rows(), 1);
  Y.mat() = A.mat().rowwise().sum();
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {a}, [a, out](Tape<T>& tp) {
    auto& g = tp.grad(a);
    const auto& dY = tp.grad(out);
    g.mat().colwise() += dY.mat().col(0);
  });
}

template <typename T>
Var<T> concat_cols(Tape<T>& t, const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeError, "concat_cols: no inputs");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  for (auto p : parts) {
    if (t.value(p).rows() != rows) throw Error(ErrorCode::ShapeError, "concat_cols: row mismatch");
    cols += t.value(p).cols();
  }
  Tensor<T> Y = matrix<T>(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (auto p : parts) {
    const auto& P = t.value(p);
    Y.mat().middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(P.cols())) = P.mat();
    offsets.push_back(off);
    off += P.cols();
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), parts, [parts, offsets, out](Tape<T>& tp) {
    const auto& dY = tp.grad(out);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!tp.requires_grad(parts[i])) continue;
      auto& g = tp.grad(parts[i]);
      g.mat() += dY.mat().middleCols(static_cast<Eigen::Index>(offsets[i]), static_cast<Eigen::Index>(g.cols()));
    }
  });
}

template <typename T>
Var<T> stack_rows(Tape<T>& t, const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeError, "stack_rows: no inputs");
  const std::size_t cols = t.value(parts[0]).cols();
  std::size_t rows = 0;
  for (auto p : parts) {
    if (t.value(p).cols() != cols) throw Error(ErrorCode::ShapeError, "stack_rows: column mismatch");
    rows += t.value(p).rows();
  }
  Tensor<T> Y = matrix<T>(rows, cols);
  std::size_t off = 0;
  for (auto p : parts) {
    const auto& P = t.value(p);
    std::copy(P.data.begin(), P.data.end(), Y.data.begin() + static_cast<std::ptrdiff_t>(off * cols));
    off += P.rows();
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), parts, [parts, out, cols](Tape<T>& tp) {
    const auto& dY = tp.grad(out);
    std::size_t row = 0;
    for (auto p : parts) {
      const std::size_t r = tp.value(p).rows();
      if (tp.requires_grad(p)) {
        auto& g = tp.grad(p);
        for (std::size_t k = 0; k < r * cols; ++k) g.data[k] += dY.data[row * cols + k];
      }
      row += r;
    }
  });
}

template <typename T>
Var<T> column(Tape<T>& t, Var<T> a, std::size_t j) {
  const auto& A = t.value(a);
  if (j >= A.cols()) throw Error(ErrorCode::IndexError, "column " + std::to_string(j) + " out of range");
  Tensor<T> Y = matrix<T>(A.rows(), 1);
  for (std::size_t r = 0; r < A.rows(); ++r) Y.data[r] = A(r, j);
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {a}, [a, out, j](Tape<T>& tp) {
    auto& g = tp.grad(a);
    const auto& dY = tp.grad(out);
    for (std::size_t r = 0; r < g.rows(); ++r) g(r, j) += dY.data[r];
  });
}

template <typename T>
Var<T> gather_cols(Tape<T>& t, Var<T> a, std::span<const int> index) {
  const auto& A = t.value(a);
  if (index.size() != A.rows()) throw Error(ErrorCode::ShapeError, "gather_cols: index length");
  std::vector<int> idx(index.begin(), index.end());
  Tensor<T> Y = matrix<T>(A.rows(), 1);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= A.cols()) {
      throw Error(ErrorCode::IndexError, "gather_cols: index " + std::to_string(idx[r]));
    }
    Y.data[r] = A(r, static_cast<std::size_t>(idx[r]));
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {a}, [a, out, idx = std::move(idx)](Tape<T>& tp) {
    auto& g = tp.grad(a);
    const auto& dY = tp.grad(out);
    for (std::size_t r = 0; r < g.rows(); ++r) g(r, static_cast<std::size_t>(idx[r])) += dY.data[r];
  });
}

namespace {

template <typename T>
void softmax_inplace(Tensor<T>& y) {
  const std::size_t cols = y.cols();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    T* row = y.data.data() + r * cols;
    T mx = row[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    T sum = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
  }
}

}  // namespace

template <typename T>
Var<T> softmax_rows(Tape<T>& t, Var<T> a) {
  Tensor<T> Y = t.value(a);
  softmax_inplace(Y);
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {a}, [a, out](Tape<T>& tp) {
    const auto& y = tp.value(out);
    const auto& dY = tp.grad(out);
    auto& g = tp.grad(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      T dot = 0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += dY(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) g(r, c) += y(r, c) * (dY(r, c) - dot);
    }
  });
}

template <typename T>
Var<T> log_softmax_rows(Tape<T>& t, Var<T> a) {
  const auto& A = t.value(a);
  Tensor<T> Y = A;
  Tensor<T> P = A;
  softmax_inplace(P);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    T mx = A(r, 0);
    for (std::size_t c = 1; c < A.cols(); ++c) mx = std::max(mx, A(r, c));
    T sum = 0;
    for (std::size_t c = 0; c < A.cols(); ++c) sum += std::exp(A(r, c) - mx);
    const T lse = mx + std::log(sum);
    for (std::size_t c = 0; c < A.cols(); ++c) Y(r, c) = A(r, c) - lse;
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {a}, [a, out, P = std::move(P)](Tape<T>& tp) {
    const auto& dY = tp.grad(out);
    auto& g = tp.grad(a);
    for (std::size_t r = 0; r < P.rows(); ++r) {
      T s = 0;
      for (std::size_t c = 0; c < P.cols(); ++c) s += dY(r, c);
      for (std::size_t c = 0; c < P.cols(); ++c) g(r, c) += dY(r, c) - P(r, c) * s;
    }
  });
}

template <typename T>
Var<T> embedding(Tape<T>& t, Var<T> table, std::span<const int> ids) {
  const auto& E = t.value(table);
  const std::size_t dim = E.cols();
  std::vector<int> idx(ids.begin(), ids.end());
  Tensor<T> Y = matrix<T>(idx.size(), dim);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= E.rows()) {
      throw Error(ErrorCode::IndexError, "embedding id " + std::to_string(idx[r]));
    }
    std::copy_n(E.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(idx[r]) * dim), dim,
                Y.data.begin() + static_cast<std::ptrdiff_t>(r * dim));
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {table}, [table, out, idx = std::move(idx), dim](Tape<T>& tp) {
    auto& g = tp.grad(table);
    const auto& dY = tp.grad(out);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      T* dst = g.data.data() + static_cast<std::size_t>(idx[r]) * dim;
      const T* src = dY.data.data() + r * dim;
      for (std::size_t c = 0; c < dim; ++c) dst[c] += src[c];
    }
  });
}

template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& t, Var<T> logits, std::span<const int> targets) {
  const auto& L = t.value(logits);
  if (targets.size() != L.rows()) throw Error(ErrorCode::ShapeError, "softmax_cross_entropy: target count");
  std::vector<int> tgt(targets.begin(), targets.end());
  Tensor<T> P = L;
  softmax_inplace(P);
  T total = 0;
  std::size_t valid = 0;
  for (std::size_t r = 0; r < L.rows(); ++r) {
    if (tgt[r] < 0) continue;
    if (static_cast<std::size_t>(tgt[r]) >= L.cols()) {
      throw Error(ErrorCode::IndexError, "target " + std::to_string(tgt[r]) + " >= " + std::to_string(L.cols()));
    }
    T mx = L(r, 0);
    for (std::size_t c = 1; c < L.cols(); ++c) mx = std::max(mx, L(r, c));
    T sum = 0;
    for (std::size_t c = 0; c < L.cols(); ++c) sum += std::exp(L(r, c) - mx);
    total += mx + std::log(sum) - L(r, static_cast<std::size_t>(tgt[r]));
    ++valid;
  }
  const T denom = valid > 0 ? static_cast<T>(valid) : T(1);
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(Tensor<T>::scalar(total / denom), {logits},
                [logits, out, tgt = std::move(tgt), P = std::move(P), denom](Tape<T>& tp) {
                  const T up = tp.grad(out).data[0] / denom;
                  auto& g = tp.grad(logits);
                  for (std::size_t r = 0; r < P.rows(); ++r) {
                    if (tgt[r] < 0) continue;
                    for (std::size_t c = 0; c < P.cols(); ++c) g(r, c) += up * P(r, c);
                    g(r, static_cast<std::size_t>(tgt[r])) -= up;
                  }
                });
}

template <typename T>
Var<T> gaussian_sample(Tape<T>& t, Var<T> mu, Var<T> log_sigma, const Tensor<T>& noise) {
  const auto& M = t.value(mu);
  const auto& S = t.value(log_sigma);
  require_same_shape(M, S, "gaussian_sample");
  require_same_shape(M, noise, "gaussian_sample");
  Tensor<T> Z = M;
  Tensor<T> scaled_noise = noise;  // exp(log_sigma) * noise
  for (std::size_t i = 0; i < Z.size(); ++i) {
    scaled_noise.data[i] = std::exp(S.data[i]) * noise.data[i];
    Z.data[i] += scaled_noise.data[i];
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Z), {mu, log_sigma}, [mu, log_sigma, out, sn = std::move(scaled_noise)](Tape<T>& tp) {
    const auto& dZ = tp.grad(out);
    if (tp.requires_grad(mu)) tp.grad(mu).mat() += dZ.mat();
    if (tp.requires_grad(log_sigma)) tp.grad(log_sigma).mat().array() += dZ.mat().array() * sn.mat().array();
  });
}

template <typename T>
Var<T> kl_rows(Tape<T>& t, Var<T> mu_q, Var<T> log_sigma_q, Var<T> mu_p, T sigma_p) {
  const auto& M = t.value(mu_q);
  const auto& S = t.value(log_sigma_q);
  const auto& P = t.value(mu_p);
  require_same_shape(M, S, "kl_rows");
  const bool bc = broadcast_row(M, P);
  if (!bc) require_same_shape(M, P, "kl_rows");
  const T var_p = sigma_p * sigma_p;
  const T log_sigma_p = std::log(sigma_p);
  Tensor<T> Y = matrix<T>(M.rows(), 1);
  for (std::size_t r = 0; r < M.rows(); ++r) {
    T acc = 0;
    for (std::size_t c = 0; c < M.cols(); ++c) {
      const T d = M(r, c) - P(bc ? 0 : r, c);
      acc += log_sigma_p - S(r, c) + (std::exp(T(2) * S(r, c)) + d * d) / (T(2) * var_p) - T(0.5);
    }
    Y.data[r] = acc;
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {mu_q, log_sigma_q, mu_p}, [=](Tape<T>& tp) {
    const auto& Mv = tp.value(mu_q);
    const auto& Sv = tp.value(log_sigma_q);
    const auto& Pv = tp.value(mu_p);
    const auto& dY = tp.grad(out);
    const bool gm = tp.requires_grad(mu_q);
    const bool gs = tp.requires_grad(log_sigma_q);
    const bool gp = tp.requires_grad(mu_p);
    for (std::size_t r = 0; r < Mv.rows(); ++r) {
      const T up = dY.data[r];
      for (std::size_t c = 0; c < Mv.cols(); ++c) {
        const std::size_t pr = bc ? 0 : r;
        const T d = (Mv(r, c) - Pv(pr, c)) / var_p;
        if (gm) tp.grad(mu_q)(r, c) += up * d;
        if (gp) tp.grad(mu_p)(pr, c) -= up * d;
        if (gs) tp.grad(log_sigma_q)(r, c) += up * (std::exp(T(2) * Sv(r, c)) / var_p - T(1));
      }
    }
  });
}

template <typename T>
Var<T> kl_diag_gaussians(Tape<T>& t, Var<T> mu_q, Var<T> log_sigma_q, Var<T> mu_p, T sigma_p) {
  return mean_all(t, kl_rows(t, mu_q, log_sigma_q, mu_p, sigma_p));
}

template <typename T>
Var<T> mixture_log_joint(Tape<T>& t, Var<T> z, Var<T> means, T variance) {
  const auto& Z = t.value(z);
  const auto& Mu = t.value(means);
  if (Z.cols() != Mu.cols()) throw Error(ErrorCode::ShapeError, "mixture_log_joint: latent width mismatch");
  const std::size_t K = Mu.rows();
  const std::size_t D = Z.cols();
  const T constant = -std::log(static_cast<T>(K)) -
                     T(0.5) * static_cast<T>(D) * std::log(T(2) * std::numbers::pi_v<T> * variance);
  Tensor<T> Y = matrix<T>(Z.rows(), K);
  for (std::size_t r = 0; r < Z.rows(); ++r) {
    for (std::size_t k = 0; k < K; ++k) {
      T sq = 0;
      for (std::size_t c = 0; c < D; ++c) {
        const T d = Z(r, c) - Mu(k, c);
        sq += d * d;
      }
      Y(r, k) = constant - T(0.5) * sq / variance;
    }
  }
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(Y), {z, means}, [=](Tape<T>& tp) {
    const auto& Zv = tp.value(z);
    const auto& Mv = tp.value(means);
    const auto& dY = tp.grad(out);
    const bool gz = tp.requires_grad(z);
    const bool gm = tp.requires_grad(means);
    for (std::size_t r = 0; r < Zv.rows(); ++r) {
      for (std::size_t k = 0; k < K; ++k) {
        const T up = dY(r, k) / variance;
        for (std::size_t c = 0; c < D; ++c) {
          const T d = Zv(r, c) - Mv(k, c);
          if (gz) tp.grad(z)(r, c) -= up * d;
          if (gm) tp.grad(means)(k, c) += up * d;
        }
      }
    }
  });
}

template <typename T>
Var<T> latent_reg_loss(Tape<T>& t, Var<T> z, std::span<const double> y) {
  const auto& Z = t.value(z);
  const std::size_t B = Z.rows();
  if (B < 2) throw Error(ErrorCode::BatchTooSmall, "latent regularization needs at least 2 samples");
  if (Z.cols() != 1 || y.size() != B) throw Error(ErrorCode::ShapeError, "latent_reg_loss: expects [B,1] and B targets");
  auto sign = [](double v) { return static_cast<T>((v > 0) - (v < 0)); };
  Tensor<T> sgn = matrix<T>(B, B);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) sgn(i, j) = sign(y[i] - y[j]);
  }
  T loss = 0;
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      const T e = std::tanh(Z.data[i] - Z.data[j]) - sgn(i, j);
      loss += e * e;
    }
  }
  const T n = static_cast<T>(B * B);
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(Tensor<T>::scalar(loss / n), {z}, [z, out, sgn = std::move(sgn), n, B](Tape<T>& tp) {
    const auto& Zv = tp.value(z);
    const T up = tp.grad(out).data[0] / n;
    auto& g = tp.grad(z);
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t j = 0; j < B; ++j) {
        const T th = std::tanh(Zv.data[i] - Zv.data[j]);
        const T d = up * T(2) * (th - sgn(i, j)) * (T(1) - th * th);
        g.data[i] += d;
        g.data[j] -= d;
      }
    }
  });
}

#define FADERS_INSTANTIATE_OPS(T)                                                                  \
  template Var<T> matmul(Tape<T>&, Var<T>, Var<T>);                                                \
  template Var<T> affine(Tape<T>&, Var<T>, Var<T>, Var<T>);                                        \
  template Var<T> add(Tape<T>&, Var<T>, Var<T>);                                                   \
  template Var<T> sub(Tape<T>&, Var<T>, Var<T>);                                                   \
  template Var<T> mul(Tape<T>&, Var<T>, Var<T>);                                                   \
  template Var<T> scale(Tape<T>&, Var<T>, T);                                                      \
  template Var<T> add_scalar(Tape<T>&, Var<T>, T);                                                 \
  template Var<T> sigmoid(Tape<T>&, Var<T>);                                                       \
  template Var<T> tanh(Tape<T>&, Var<T>);                                                          \
  template Var<T> exp(Tape<T>&, Var<T>);                                                           \
  template Var<T> sum_all(Tape<T>&, Var<T>);                                                       \
  template Var<T> mean_all(Tape<T>&, Var<T>);                                                      \
  template Var<T> row_sum(Tape<T>&, Var<T>);                                                       \
  template Var<T> concat_cols(Tape<T>&, const std::vector<Var<T>>&);                               \
  template Var<T> stack_rows(Tape<T>&, const std::vector<Var<T>>&);                                \
  template Var<T> column(Tape<T>&, Var<T>, std::size_t);                                           \
  template Var<T> gather_cols(Tape<T>&, Var<T>, std::span<const int>);                             \
  template Var<T> softmax_rows(Tape<T>&, Var<T>);                                                  \
  template Var<T> log_softmax_rows(Tape<T>&, Var<T>);                                              \
  template Var<T> embedding(Tape<T>&, Var<T>, std::span<const int>);                               \
  template Var<T> softmax_cross_entropy(Tape<T>&, Var<T>, std::span<const int>);                   \
  template Var<T> gaussian_sample(Tape<T>&, Var<T>, Var<T>, const Tensor<T>&);                     \
  template Var<T> kl_rows(Tape<T>&, Var<T>, Var<T>, Var<T>, T);                                    \
  template Var<T> kl_diag_gaussians(Tape<T>&, Var<T>, Var<T>, Var<T>, T);                          \
  template Var<T> mixture_log_joint(Tape<T>&, Var<T>, Var<T>, T);                                  \
  template Var<T> latent_reg_loss(Tape<T>&, Var<T>, std::span<const double>);

FADERS_INSTANTIATE_OPS(float)
FADERS_INSTANTIATE_OPS(double)
// Extended precision serves as the finite-difference reference in grad checks.
FADERS_INSTANTIATE_OPS(long double)

}  // namespace faders::diff
