// SPDX-License-Identifier: Apache-2.0
//
// Controllability scores. Matrices are indexed [m][t]: sample m, slid value t.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace faders {

using Matrix = std::vector<std::vector<double>>;

// min + (t / T)(max - min) for t = 1..T. InvalidSweep for T < 2 or min > max.
std::vector<double> slide_values(double z_min, double z_max, std::size_t T = 8);

// Population standard deviation.
double population_std(std::span<const double> values);

// 1 - mean over t of the std across samples. InsufficientSamples for M < 2.
double consistency_score(const Matrix& values);
// 1 - mean over m of the std across slid values. InsufficientSamples for T < 2.
double restrictiveness_score(const Matrix& values);

// R^2 of the least-squares line y = a x + b over all pairs; 0 when the
// targets have (numerically) no variance. InsufficientSamples for < 3 pairs.
double linearity_score(std::span<const double> x, std::span<const double> y);

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

// Centered projection onto the top two principal axes. Each axis is signed
// so its largest-magnitude loading is positive. InsufficientSamples for < 2.
std::vector<ProjectedPoint> project_latents(const std::vector<std::vector<double>>& z,
                                            const std::vector<std::string>& labels);

}  // namespace faders
