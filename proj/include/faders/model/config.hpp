// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace faders {

enum class ModelMode { VanillaVae, GmVae, AblationSingleLatent };

std::string_view to_string(ModelMode mode);
ModelMode parse_mode(std::string_view name);  // InvalidConfig on unknown names

// Low-level features modelled by dedicated latents.
enum class Feature { Rhythm = 0, Note = 1 };
inline constexpr std::size_t kFeatureCount = 2;

std::string_view to_string(Feature f);
Feature parse_feature(std::string_view name);

struct BetaSchedule {
  std::uint64_t start_steps = 1000;  // beta = 0 before this step
  std::uint64_t ramp_steps = 10000;  // linear ramp length
  double beta_max = 0.2;

  double at(std::uint64_t step) const;
};

inline constexpr int kConfigSchemaVersion = 1;

struct ModelConfig {
  std::string preset = "desk";
  ModelMode mode = ModelMode::GmVae;
  std::size_t clusters = 2;
  std::size_t z_dim = 16;
  std::size_t hidden_dim = 128;
  std::size_t embed_dim = 64;
  std::size_t regularized_dim = 0;
  double prior_variance = 0.1353352832366127;  // e^-2
  bool latent_regularization = true;
  bool discriminators = true;

  // training
  std::size_t batch_size = 32;
  // Slots per batch drawn from the labelled pool on top of the plain shuffle; at most half the batch.
  std::size_t labelled_per_batch = 4;
  std::uint64_t train_steps = 4000;
  double learning_rate = 2e-3;
  double grad_clip = 5.0;  // 0 disables
  BetaSchedule beta{};

  static ModelConfig desk();
  static ModelConfig paper();

  // InvalidConfig on violated invariants.
  void validate() const;
  std::size_t latent_count() const { return mode == ModelMode::AblationSingleLatent ? 1 : kFeatureCount; }
  bool has_discriminators() const { return discriminators && mode != ModelMode::AblationSingleLatent; }
  bool has_latent_regularization() const {
    return latent_regularization && mode != ModelMode::AblationSingleLatent;
  }
  bool has_mixture_prior() const { return mode != ModelMode::VanillaVae; }
};

nlohmann::json to_json(const ModelConfig& config);
// Missing fields keep the preset named by "preset" (default desk).
ModelConfig config_from_json(const nlohmann::json& j);
ModelConfig load_config(const std::string& path);

}  // namespace faders
