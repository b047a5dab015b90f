// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "faders/model/fadernet.hpp"
#include "json.hpp"

namespace faders {

// mean[to] - mean[from] of one latent's mixture prior.
// UnsupportedInMode without a mixture prior; IndexError on bad indices.
std::vector<double> shift_vector(const FaderNet<float>& model, std::size_t latent, int from_class, int to_class);

struct TransferResult {
  Segment segment_out;
  TokenSeq tokens_out;
  Densities densities_before;
  Densities densities_after;
  std::vector<std::vector<double>> clusters_before;  // q(c|z) per latent
  std::vector<std::vector<double>> clusters_after;
  std::vector<bool> shifted;  // per latent
  LatentCode z_before;
  LatentCode z_after;
};

// Latents whose argmax cluster differs from `target_class` move by
// alpha * shift_vector toward it; the rest stay put. No re-clamping to the
// fader range. The decode uses the segment's own key.
TransferResult transfer(const FaderNet<float>& model, const Segment& segment, int target_class, double alpha = 1.0);

// Shifts a code without decoding; the pure half of `transfer`.
LatentCode shift_code(const FaderNet<float>& model, const LatentCode& code, int target_class, double alpha,
                      std::vector<bool>* shifted = nullptr);

nlohmann::json transfer_to_json(const TransferResult& result);

}  // namespace faders
