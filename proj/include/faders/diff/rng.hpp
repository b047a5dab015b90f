// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace faders::diff {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// One root seed; every consumer draws from its own stream derived from
// (stream name, root seed) so adding a consumer never perturbs the others.
class SeedSequence {
 public:
  explicit SeedSequence(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const { return root_; }
  std::uint64_t derive(std::string_view stream) const { return splitmix64(fnv1a64(stream) ^ splitmix64(root_)); }
  std::mt19937_64 stream(std::string_view name) const { return std::mt19937_64(derive(name)); }

 private:
  std::uint64_t root_;
};

// Draws are implemented here rather than with <random> distributions so
// sequences are identical across standard library implementations.
double uniform01(std::mt19937_64& gen);
double uniform(std::mt19937_64& gen, double lo, double hi);
double standard_normal(std::mt19937_64& gen);
std::size_t uniform_index(std::mt19937_64& gen, std::size_t n);

template <typename It>
void shuffle(It first, It last, std::mt19937_64& gen) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(gen, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace faders::diff
