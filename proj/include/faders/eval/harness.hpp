// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faders/eval/metrics.hpp"
#include "faders/model/fadernet.hpp"
#include "json.hpp"

namespace faders {

// What a fader sweep needs from a model: deterministic encode/decode and the
// stored z^d range. Lets the harness run against stubs.
class FaderCodec {
 public:
  virtual ~FaderCodec() = default;
  virtual std::vector<LatentCode> encode(std::span<const CorpusRecord> records) const = 0;
  virtual std::vector<Segment> decode(std::span<const LatentCode> codes, std::span<const KeyVector> keys) const = 0;
  virtual std::size_t latent_index(Feature feature) const = 0;
  virtual std::size_t regularized_dim() const = 0;
  virtual ZRange z_range(Feature feature) const = 0;
  virtual std::string id() const = 0;
};

// Posterior-mean encoding and greedy decoding. UnsupportedInMode for the
// single-latent ablation, which has no per-feature fader.
class ModelCodec : public FaderCodec {
 public:
  ModelCodec(const FaderNet<float>& model, std::string id);
  std::vector<LatentCode> encode(std::span<const CorpusRecord> records) const override;
  std::vector<Segment> decode(std::span<const LatentCode> codes, std::span<const KeyVector> keys) const override;
  std::size_t latent_index(Feature feature) const override { return static_cast<std::size_t>(feature); }
  std::size_t regularized_dim() const override { return model_.config().regularized_dim; }
  ZRange z_range(Feature feature) const override;
  std::string id() const override { return id_; }

 private:
  const FaderNet<float>& model_;
  std::string id_;
};

struct SweepResult {
  Feature feature = Feature::Rhythm;
  std::vector<double> values;        // [T] slid z^d
  std::vector<std::size_t> samples;  // [M] test-set indices
  Matrix rhythm;                     // [M][T] rhythm density of decoded output
  Matrix note;                       // [M][T] raw note density of decoded output
};

// EmptyCorpus for an empty test set; M is capped at its size.
SweepResult fader_sweep(const FaderCodec& codec, std::span<const CorpusRecord> test_set, Feature feature,
                        std::size_t T, std::size_t M, std::uint64_t seed);

struct FeatureScores {
  double consistency = 0.0;
  double restrictiveness = 0.0;
  double linearity = 0.0;
};

struct EvalReport {
  std::array<FeatureScores, kFeatureCount> scores{};
  std::size_t T = 8;
  std::size_t M = 100;
  std::uint64_t seed = 0;
  std::string checkpoint_id;
};

// Note density enters consistency and restrictiveness divided by 16.
inline constexpr double kNoteDensityScale = 16.0;

EvalReport evaluate(const FaderCodec& codec, std::span<const CorpusRecord> test_set, std::size_t T, std::size_t M,
                    std::uint64_t seed);
EvalReport score_sweeps(const SweepResult& rhythm_sweep, const SweepResult& note_sweep);

nlohmann::json report_to_json(const EvalReport& report);
// Header plus one row per (model, feature).
std::string reports_csv(const std::vector<std::pair<std::string, EvalReport>>& reports);

// q(c|X) with the per-latent posteriors multiplied and renormalized.
std::vector<double> combined_cluster_posterior(const FaderNet<float>& model, const LatentCode& code);

struct ClusterScore {
  double accuracy = 0.0;
  std::size_t scored = 0;
};

// Scores argmax of the combined posterior against true_class (or
// arousal_class when no ground truth is recorded). Unlabelled records are
// skipped; InsufficientSamples when nothing can be scored.
ClusterScore cluster_accuracy(const FaderNet<float>& model, std::span<const CorpusRecord> records);

}  // namespace faders
