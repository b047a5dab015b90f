// SPDX-License-Identifier: Apache-2.0
#include "faders/transfer.hpp"

#include <algorithm>

#include "faders/corpus/corpus.hpp"
#include "faders/error.hpp"

namespace faders {

using nlohmann::json;

namespace {

void require_mixture(const FaderNet<float>& model) {
  if (!model.config().has_mixture_prior()) {
    throw Error(ErrorCode::UnsupportedInMode, "transfer needs a mixture prior, checkpoint is " +
                                                  std::string(to_string(model.config().mode)));
  }
}

void require_class(const FaderNet<float>& model, int c) {
  if (c < 0 || c >= static_cast<int>(model.config().clusters)) {
    throw Error(ErrorCode::IndexError, "cluster " + std::to_string(c));
  }
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<std::vector<double>> posteriors(const FaderNet<float>& model, const LatentCode& code) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < model.latent_count(); ++i) out.push_back(model.infer_cluster(i, code.z.at(i)));
  return out;
}

}  // namespace

std::vector<double> shift_vector(const FaderNet<float>& model, std::size_t latent, int from_class, int to_class) {
  require_mixture(model);
  require_class(model, from_class);
  require_class(model, to_class);
  const auto means = model.prior_means(latent);
  const auto& from = means[static_cast<std::size_t>(from_class)];
  const auto& to = means[static_cast<std::size_t>(to_class)];
  std::vector<double> out(from.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = to[j] - from[j];
  return out;
}

LatentCode shift_code(const FaderNet<float>& model, const LatentCode& code, int target_class, double alpha,
                      std::vector<bool>* shifted) {
  require_mixture(model);
  require_class(model, target_class);
  if (alpha < 0.0) throw Error(ErrorCode::InvalidConfig, "alpha must be >= 0");
  LatentCode out = code;
  if (shifted != nullptr) shifted->assign(model.latent_count(), false);
  for (std::size_t i = 0; i < model.latent_count(); ++i) {
    const auto q = model.infer_cluster(i, code.z.at(i));
    const auto current = static_cast<int>(argmax(q));
    if (current == target_class) continue;
    if (alpha == 0.0) continue;
    const auto s = shift_vector(model, i, current, target_class);
    for (std::size_t j = 0; j < s.size(); ++j) out.z[i][j] += alpha * s[j];
    if (shifted != nullptr) (*shifted)[i] = true;
  }
  return out;
}

TransferResult transfer(const FaderNet<float>& model, const Segment& segment, int target_class, double alpha) {
  require_mixture(model);
  const TokenSeq tokens = encode_tokens(segment);
  const KeyVector key = conditioning_key(segment);
  TransferResult r;
  r.z_before = model.encode_means(std::span<const TokenSeq>(&tokens, 1)).front();
  r.clusters_before = posteriors(model, r.z_before);
  r.z_after = shift_code(model, r.z_before, target_class, alpha, &r.shifted);
  r.clusters_after = posteriors(model, r.z_after);
  r.tokens_out = model.greedy_decode(std::span<const LatentCode>(&r.z_after, 1), std::span<const KeyVector>(&key, 1)).front();
  r.segment_out = decode_tokens(r.tokens_out);
  r.densities_before = densities(segment);
  r.densities_after = densities(r.segment_out);
  return r;
}

json transfer_to_json(const TransferResult& r) {
  auto dens = [](const Densities& d) { return json{{"rhythm_density", d.rhythm_density}, {"note_density", d.note_density}}; };
  return {
      {"tokens", token_ids(r.tokens_out)},
      {"notes", segment_to_json(r.segment_out)},
      {"densities_before", dens(r.densities_before)},
      {"densities_after", dens(r.densities_after)},
      {"density_delta",
       {{"rhythm_density", r.densities_after.rhythm_density - r.densities_before.rhythm_density},
        {"note_density", r.densities_after.note_density - r.densities_before.note_density}}},
      {"clusters_before", r.clusters_before},
      {"clusters_after", r.clusters_after},
      {"shifted", r.shifted},
      {"z_before", r.z_before.z},
      {"z_after", r.z_after.z},
  };
}

}  // namespace faders
