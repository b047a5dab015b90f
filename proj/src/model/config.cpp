// SPDX-License-Identifier: Apache-2.0
#include "faders/model/config.hpp"

#include <algorithm>
#include <fstream>

#include "faders/error.hpp"

namespace faders {

std::string_view to_string(ModelMode mode) {
  switch (mode) {
    case ModelMode::VanillaVae: return "vanilla_vae";
    case ModelMode::GmVae: return "gm_vae";
    case ModelMode::AblationSingleLatent: return "ablation_single_latent";
  }
  return "gm_vae";
}

ModelMode parse_mode(std::string_view name) {
  if (name == "vanilla_vae") return ModelMode::VanillaVae;
  if (name == "gm_vae") return ModelMode::GmVae;
  if (name == "ablation_single_latent") return ModelMode::AblationSingleLatent;
  throw Error(ErrorCode::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(Feature f) { return f == Feature::Rhythm ? "rhythm" : "note"; }

Feature parse_feature(std::string_view name) {
  if (name == "rhythm") return Feature::Rhythm;
  if (name == "note") return Feature::Note;
  throw Error(ErrorCode::InvalidConfig, "unknown feature '" + std::string(name) + "'");
}

double BetaSchedule::at(std::uint64_t step) const {
  if (step < start_steps) return 0.0;
  if (ramp_steps == 0) return beta_max;
  const double progress = static_cast<double>(step - start_steps) / static_cast<double>(ramp_steps);
  return beta_max * std::min(1.0, progress);
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.preset = "desk";
  c.beta = {100, 1000, 0.2};
  return c;
}

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.preset = "paper";
  c.z_dim = 128;
  c.hidden_dim = 512;
  c.embed_dim = 512;
  c.batch_size = 128;
  c.train_steps = 100000;
  c.learning_rate = 1e-3;
  c.beta = {1000, 10000, 0.2};
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (z_dim < 2) fail("z_dim must be >= 2");
  if (regularized_dim >= z_dim) fail("regularized_dim must be < z_dim");
  if (clusters < 2) fail("clusters must be >= 2");
  if (!(prior_variance > 0)) fail("prior_variance must be > 0");
  if (hidden_dim == 0 || embed_dim == 0) fail("hidden_dim and embed_dim must be positive");
  if (batch_size < 2) fail("batch_size must be >= 2");
  if (2 * labelled_per_batch > batch_size) fail("labelled_per_batch must be <= batch_size / 2");
  if (!(learning_rate > 0)) fail("learning_rate must be > 0");
  if (beta.beta_max < 0) fail("beta_max must be >= 0");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"schema_version", kConfigSchemaVersion},
      {"preset", c.preset},
      {"mode", std::string(to_string(c.mode))},
      {"clusters", c.clusters},
      {"z_dim", c.z_dim},
      {"hidden_dim", c.hidden_dim},
      {"embed_dim", c.embed_dim},
      {"regularized_dim", c.regularized_dim},
      {"prior_variance", c.prior_variance},
      {"latent_regularization", c.latent_regularization},
      {"discriminators", c.discriminators},
      {"batch_size", c.batch_size},
      {"labelled_per_batch", c.labelled_per_batch},
      {"train_steps", c.train_steps},
      {"learning_rate", c.learning_rate},
      {"grad_clip", c.grad_clip},
      {"beta", {{"start_steps", c.beta.start_steps}, {"ramp_steps", c.beta.ramp_steps}, {"beta_max", c.beta.beta_max}}},
  };
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion) {
      throw Error(ErrorCode::InvalidConfig,
                  "unsupported schema_version " + std::to_string(j.at("schema_version").get<int>()));
    }
    const std::string preset = j.value("preset", std::string("desk"));
    ModelConfig c;
    if (preset == "desk") {
      c = ModelConfig::desk();
    } else if (preset == "paper") {
      c = ModelConfig::paper();
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown preset '" + preset + "'");
    }
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    c.clusters = j.value("clusters", c.clusters);
    c.z_dim = j.value("z_dim", c.z_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.regularized_dim = j.value("regularized_dim", c.regularized_dim);
    c.prior_variance = j.value("prior_variance", c.prior_variance);
    c.latent_regularization = j.value("latent_regularization", c.latent_regularization);
    c.discriminators = j.value("discriminators", c.discriminators);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.labelled_per_batch = j.value("labelled_per_batch", c.labelled_per_batch);
    c.train_steps = j.value("train_steps", c.train_steps);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    if (j.contains("beta")) {
      const auto& b = j.at("beta");
      c.beta.start_steps = b.value("start_steps", c.beta.start_steps);
      c.beta.ramp_steps = b.value("ramp_steps", c.beta.ramp_steps);
      c.beta.beta_max = b.value("beta_max", c.beta.beta_max);
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
}

}  // namespace faders
