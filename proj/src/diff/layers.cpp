// SPDX-License-Identifier: Apache-2.0
#include "faders/diff/layers.hpp"

#include <cmath>

#include "faders/diff/rng.hpp"

namespace faders::diff {

template <typename T>
Parameter<T>* ParameterStore<T>::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
std::vector<Parameter<T>*> ParameterStore<T>::pointers() {
  std::vector<Parameter<T>*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
Tensor<T> xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& gen) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> w = Tensor<T>::matrix(fan_in, fan_out);
  for (auto& v : w.data) v = static_cast<T>(uniform(gen, -limit, limit));
  return w;
}

template <typename T>
Linear<T> Linear<T>::create(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                            std::mt19937_64& gen) {
  Linear l;
  l.weight = &store.add(name + ".weight", xavier_uniform<T>(in, out, gen));
  l.bias = &store.add(name + ".bias", Tensor<T>::matrix(1, out));
  return l;
}

template <typename T>
RowMatrix<T> Linear<T>::forward(const RowMatrix<T>& x) const {
  RowMatrix<T> y = x * weight->value.mat();
  y.rowwise() += bias->value.mat().row(0);
  return y;
}

template <typename T>
GruCell<T> GruCell<T>::create(ParameterStore<T>& store, const std::string& name, std::size_t input_size,
                              std::size_t hidden_size, std::mt19937_64& gen) {
  GruCell c;
  c.input_size = input_size;
  c.hidden_size = hidden_size;
  // Each gate block gets its own Xavier draw.
  Tensor<T> w = Tensor<T>::matrix(input_size, 3 * hidden_size);
  Tensor<T> u = Tensor<T>::matrix(hidden_size, 3 * hidden_size);
  for (std::size_t g = 0; g < 3; ++g) {
    const auto wg = xavier_uniform<T>(input_size, hidden_size, gen);
    const auto ug = xavier_uniform<T>(hidden_size, hidden_size, gen);
    w.mat().middleCols(static_cast<Eigen::Index>(g * hidden_size), static_cast<Eigen::Index>(hidden_size)) =
        wg.mat();
    u.mat().middleCols(static_cast<Eigen::Index>(g * hidden_size), static_cast<Eigen::Index>(hidden_size)) =
        ug.mat();
  }
  c.w = &store.add(name + ".w", std::move(w));
  c.u = &store.add(name + ".u", std::move(u));
  c.b = &store.add(name + ".b", Tensor<T>::matrix(1, 3 * hidden_size));
  return c;
}

namespace {

template <typename T>
T sigm(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

template <typename T>
void check_gru_shapes(const GruCell<T>& cell, const Tensor<T>& x, const Tensor<T>& h) {
  if (x.cols() != cell.input_size || h.cols() != cell.hidden_size || x.rows() != h.rows()) {
    throw Error(ErrorCode::ShapeError, "gru_step: x [" + std::to_string(x.rows()) + "," + std::to_string(x.cols()) +
                                           "] h [" + std::to_string(h.rows()) + "," + std::to_string(h.cols()) +
                                           "] for cell(" + std::to_string(cell.input_size) + "," +
                                           std::to_string(cell.hidden_size) + ")");
  }
}

// Gate pre-activations and activations for one step.
template <typename T>
struct GruForward {
  RowMatrix<T> r, u, n, hn;  // hn = h U_n
  RowMatrix<T> h_next;
};

template <typename T>
GruForward<T> gru_kernel(const GruCell<T>& cell, const ConstMatrixMap<T>& x, const ConstMatrixMap<T>& h) {
  const auto H = static_cast<Eigen::Index>(cell.hidden_size);
  RowMatrix<T> xw = x * cell.w->value.mat();
  xw.rowwise() += cell.b->value.mat().row(0);
  RowMatrix<T> hu = h * cell.u->value.mat();
  GruForward<T> f;
  f.r = (xw.leftCols(H) + hu.leftCols(H)).unaryExpr([](T v) { return sigm(v); });
  f.u = (xw.middleCols(H, H) + hu.middleCols(H, H)).unaryExpr([](T v) { return sigm(v); });
  f.hn = hu.rightCols(H);
  f.n = (xw.rightCols(H).array() + f.r.array() * f.hn.array()).tanh().matrix();
  f.h_next = ((T(1) - f.u.array()) * f.n.array() + f.u.array() * h.array()).matrix();
  return f;
}

}  // namespace

template <typename T>
Var<T> gru_step(Tape<T>& t, const GruCell<T>& cell, Var<T> x, Var<T> h, std::span<const T> mask) {
  const auto& X = t.value(x);
  const auto& Hm = t.value(h);
  check_gru_shapes(cell, X, Hm);
  if (!mask.empty() && mask.size() != X.rows()) throw Error(ErrorCode::ShapeError, "gru_step: mask length");
  auto f = gru_kernel(cell, X.mat(), Hm.mat());
  std::vector<T> m(mask.begin(), mask.end());
  Tensor<T> out_value = Tensor<T>::matrix(X.rows(), cell.hidden_size);
  out_value.mat() = f.h_next;
  if (!m.empty()) {
    for (std::size_t r = 0; r < X.rows(); ++r) {
      if (m[r] == T(0)) out_value.mat().row(static_cast<Eigen::Index>(r)) = Hm.mat().row(static_cast<Eigen::Index>(r));
    }
  }
  Var<T> w = t.param(*cell.w);
  Var<T> u = t.param(*cell.u);
  Var<T> b = t.param(*cell.b);
  Var<T> out{static_cast<std::uint32_t>(t.size())};
  return t.push(std::move(out_value), {x, h, w, u, b},
                [x, h, w, u, b, out, f = std::move(f), m = std::move(m)](Tape<T>& tp) {
                  const auto H = f.r.cols();
                  const auto& dHn = tp.grad(out);
                  RowMatrix<T> dh_next = dHn.mat();
                  RowMatrix<T> carry;  // gradient routed straight through masked rows
                  if (!m.empty()) {
                    carry = RowMatrix<T>::Zero(dh_next.rows(), H);
                    for (Eigen::Index r = 0; r < dh_next.rows(); ++r) {
                      if (m[static_cast<std::size_t>(r)] == T(0)) {
                        carry.row(r) = dh_next.row(r);
                        dh_next.row(r).setZero();
                      }
                    }
                  }
                  const auto hv = tp.value(h).mat();
                  const auto xv = tp.value(x).mat();
                  const auto dn = (dh_next.array() * (T(1) - f.u.array())).eval();
                  const auto du = (dh_next.array() * (hv.array() - f.n.array())).eval();
                  const auto dn_pre = (dn * (T(1) - f.n.array().square())).eval();
                  const auto du_pre = (du * f.u.array() * (T(1) - f.u.array())).eval();
                  const auto dr = (dn_pre * f.hn.array()).eval();
                  const auto dr_pre = (dr * f.r.array() * (T(1) - f.r.array())).eval();

                  RowMatrix<T> dx3(dh_next.rows(), 3 * H);
                  dx3.leftCols(H) = dr_pre.matrix();
                  dx3.middleCols(H, H) = du_pre.matrix();
                  dx3.rightCols(H) = dn_pre.matrix();
                  RowMatrix<T> dh3 = dx3;
                  dh3.rightCols(H) = (dn_pre * f.r.array()).matrix();

                  if (tp.requires_grad(w)) tp.grad(w).mat().noalias() += xv.transpose() * dx3;
                  if (tp.requires_grad(b)) tp.grad(b).mat().row(0) += dx3.colwise().sum();
                  if (tp.requires_grad(u)) tp.grad(u).mat().noalias() += hv.transpose() * dh3;
                  if (tp.requires_grad(x)) tp.grad(x).mat().noalias() += dx3 * tp.value(w).mat().transpose();
                  if (tp.requires_grad(h)) {
                    auto g = tp.grad(h).mat();
                    g.noalias() += dh3 * tp.value(u).mat().transpose();
                    g.array() += dh_next.array() * f.u.array();
                    if (!m.empty()) g += carry;
                  }
                });
}

template <typename T>
RowMatrix<T> gru_forward(const GruCell<T>& cell, const RowMatrix<T>& x, const RowMatrix<T>& h) {
  if (static_cast<std::size_t>(x.cols()) != cell.input_size ||
      static_cast<std::size_t>(h.cols()) != cell.hidden_size || x.rows() != h.rows()) {
    throw Error(ErrorCode::ShapeError, "gru_forward: shape mismatch");
  }
  ConstMatrixMap<T> xm(x.data(), x.rows(), x.cols());
  ConstMatrixMap<T> hm(h.data(), h.rows(), h.cols());
  return gru_kernel(cell, xm, hm).h_next;
}

template <typename T>
Tensor<T> gru_step(const GruCell<T>& cell, const Tensor<T>& x, const Tensor<T>& h) {
  check_gru_shapes(cell, x, h);
  auto f = gru_kernel(cell, x.mat(), h.mat());
  Tensor<T> out = Tensor<T>::matrix(x.rows(), cell.hidden_size);
  out.mat() = f.h_next;
  return out;
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class ParameterStore<long double>;
template struct Linear<float>;
template struct Linear<double>;
template struct Linear<long double>;
template struct GruCell<float>;
template struct GruCell<double>;
template struct GruCell<long double>;
template Tensor<float> xavier_uniform<float>(std::size_t, std::size_t, std::mt19937_64&);
template Tensor<double> xavier_uniform<double>(std::size_t, std::size_t, std::mt19937_64&);
template Tensor<long double> xavier_uniform<long double>(std::size_t, std::size_t, std::mt19937_64&);
template Var<float> gru_step(Tape<float>&, const GruCell<float>&, Var<float>, Var<float>, std::span<const float>);
template Var<double> gru_step(Tape<double>&, const GruCell<double>&, Var<double>, Var<double>, std::span<const double>);
template Var<long double> gru_step(Tape<long double>&, const GruCell<long double>&, Var<long double>, Var<long double>, std::span<const long double>);
template RowMatrix<float> gru_forward(const GruCell<float>&, const RowMatrix<float>&, const RowMatrix<float>&);
template RowMatrix<double> gru_forward(const GruCell<double>&, const RowMatrix<double>&, const RowMatrix<double>&);
template RowMatrix<long double> gru_forward(const GruCell<long double>&, const RowMatrix<long double>&, const RowMatrix<long double>&);
template Tensor<float> gru_step(const GruCell<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> gru_step(const GruCell<double>&, const Tensor<double>&, const Tensor<double>&);
template Tensor<long double> gru_step(const GruCell<long double>&, const Tensor<long double>&, const Tensor<long double>&);

}  // namespace faders::diff
