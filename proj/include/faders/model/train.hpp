// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "faders/model/fadernet.hpp"

namespace faders {

struct StepLog {
  std::uint64_t step = 0;
  LossBreakdown loss;
  double grad_norm = 0.0;  // before clipping
};

struct TrainResult {
  FaderNet<float> model;
  std::vector<StepLog> log;
};

using StepCallback = std::function<void(const StepLog&)>;

// Adam over shuffled minibatches for config.train_steps steps. Labelled
// records take the supervised KL branch, the rest the marginalized one,
// within the same batch. Streams: "init", "train.batches", "train.noise".
// Stores per-latent z^d ranges over `train_set` in the returned model.
// EmptyCorpus when there are fewer than two records.
TrainResult train(const ModelConfig& config, std::span<const CorpusRecord> train_set, std::uint64_t seed,
                  const StepCallback& on_step = {});

// min/max of z^d (posterior mean) per latent.
std::vector<ZRange> latent_ranges(const FaderNet<float>& model, std::span<const CorpusRecord> records);

std::string loss_curve_csv(const std::vector<StepLog>& log);

}  // namespace faders
