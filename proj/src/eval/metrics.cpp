// SPDX-License-Identifier: Apache-2.0
#include "faders/eval/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "faders/error.hpp"

namespace faders {

std::vector<double> slide_values(double z_min, double z_max, std::size_t T) {
  if (T < 2) throw Error(ErrorCode::InvalidSweep, "T=" + std::to_string(T) + " (need >= 2)");
  if (!(z_min <= z_max)) throw Error(ErrorCode::InvalidSweep, "z_min > z_max");
  std::vector<double> out(T);
  for (std::size_t t = 1; t <= T; ++t) {
    out[t - 1] = z_min + (static_cast<double>(t) / static_cast<double>(T)) * (z_max - z_min);
  }
  out.back() = z_max;
  return out;
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

namespace {

std::size_t checked_cols(const Matrix& values) {
  const std::size_t T = values.empty() ? 0 : values.front().size();
  for (const auto& row : values) {
    if (row.size() != T) throw Error(ErrorCode::ShapeError, "ragged score matrix");
  }
  return T;
}

}  // namespace

double consistency_score(const Matrix& values) {
  const std::size_t M = values.size();
  if (M < 2) throw Error(ErrorCode::InsufficientSamples, "consistency needs M >= 2, got " + std::to_string(M));
  const std::size_t T = checked_cols(values);
  if (T == 0) throw Error(ErrorCode::InsufficientSamples, "consistency needs T >= 1");
  double total = 0.0;
  std::vector<double> column(M);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t m = 0; m < M; ++m) column[m] = values[m][t];
    total += population_std(column);
  }
  return 1.0 - total / static_cast<double>(T);
}

double restrictiveness_score(const Matrix& values) {
  const std::size_t T = checked_cols(values);
  if (T < 2) throw Error(ErrorCode::InsufficientSamples, "restrictiveness needs T >= 2, got " + std::to_string(T));
  if (values.empty()) throw Error(ErrorCode::InsufficientSamples, "restrictiveness needs M >= 1");
  double total = 0.0;
  for (const auto& row : values) total += population_std(row);
  return 1.0 - total / static_cast<double>(values.size());
}

double linearity_score(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::ShapeError, "linearity: x and y lengths differ");
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorCode::InsufficientSamples, "linearity needs >= 3 pairs, got " + std::to_string(n));
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  if (ss_tot < 1e-12) return 0.0;
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double intercept = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (slope * x[i] + intercept);
    ss_res += r * r;
  }
  return 1.0 - ss_res / ss_tot;
}

std::vector<ProjectedPoint> project_latents(const std::vector<std::vector<double>>& z,
                                            const std::vector<std::string>& labels) {
  const std::size_t n = z.size();
  if (n < 2) throw Error(ErrorCode::InsufficientSamples, "projection needs >= 2 vectors");
  if (!labels.empty() && labels.size() != n) throw Error(ErrorCode::ShapeError, "one label per vector");
  const std::size_t dim = z.front().size();
  if (dim == 0) throw Error(ErrorCode::ShapeError, "empty latent vectors");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    if (z[i].size() != dim) throw Error(ErrorCode::ShapeError, "ragged latent vectors");
    for (std::size_t j = 0; j < dim; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z[i][j];
  }
  X.rowwise() -= X.colwise().mean();
  const Eigen::MatrixXd cov = X.transpose() * X / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // eigenvalues ascending
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), 2);
  const auto d = static_cast<Eigen::Index>(dim);
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, d); ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(k) = v;
  }
  const Eigen::MatrixXd P = X * axes;
  std::vector<ProjectedPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {P(static_cast<Eigen::Index>(i), 0), P(static_cast<Eigen::Index>(i), 1), labels.empty() ? "" : labels[i]};
  }
  return out;
}

}  // namespace faders
