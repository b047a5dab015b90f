// SPDX-License-Identifier: Apache-2.0
//
// Two-encoder (rhythm, note) GRU VAE with a Gaussian-mixture latent prior,
// per-feature label discriminators and a global token decoder conditioned
// on both latents and the key.
#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faders/corpus/corpus.hpp"
#include "faders/diff/layers.hpp"
#include "faders/model/config.hpp"

namespace faders {

using diff::Tape;
using diff::Tensor;
using diff::Var;

// Padded training batch. Sequence tensors are time-major: entry t * B + b.
struct Batch {
  std::size_t size = 0;
  std::size_t max_len = 0;
  std::vector<int> tokens;          // [L, B], kPadId past each sequence end
  std::vector<int> lengths;         // [B]
  std::vector<int> rhythm_targets;  // [16, B] values in {0,1,2}
  std::vector<int> note_targets;    // [16, B] values in [0,15]
  std::vector<int> keys;            // [B]
  std::vector<double> rhythm_density;
  std::vector<double> note_density;
  std::vector<int> cluster_labels;  // [B], -1 when unlabelled

  // Throws TokenOverflow for sequences longer than kMaxTokens.
  static Batch from_records(std::span<const CorpusRecord* const> records);
  static Batch from_records(std::span<const CorpusRecord> records);
};

struct LossBreakdown {
  double reconstruction = 0;
  double kl_rhythm = 0;  // unweighted; in single-latent mode this is the lone KL
  double kl_note = 0;
  double reg_rhythm = 0;
  double reg_note = 0;
  double disc_rhythm = 0;
  double disc_note = 0;
  double beta = 0;
  double total = 0;  // reconstruction + beta * (kl_rhythm + kl_note) + reg + disc
};

template <typename T>
struct PosteriorVars {
  Var<T> mu;
  Var<T> log_sigma;
  Var<T> z;
};

template <typename T>
struct ForwardResult {
  Var<T> total;
  LossBreakdown breakdown;
  std::vector<PosteriorVars<T>> posteriors;
};

// Per-latent code (rhythm, note) or the single latent in ablation mode.
struct LatentCode {
  std::vector<std::vector<double>> z;
};

struct ZRange {
  double min = 0.0;
  double max = 0.0;
};

template <typename T>
class FaderNet {
 public:
  FaderNet(const ModelConfig& config, std::uint64_t seed);
  FaderNet(FaderNet&&) noexcept = default;
  FaderNet& operator=(FaderNet&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  diff::ParameterStore<T>& params() { return *store_; }
  const diff::ParameterStore<T>& params() const { return *store_; }
  std::vector<diff::Parameter<T>*> parameter_list() { return store_->pointers(); }
  std::size_t latent_count() const { return config_.latent_count(); }

  // Training graph: all four loss families for one batch. `noise` holds one
  // [B, z_dim] standard-normal tensor per latent.
  ForwardResult<T> forward(Tape<T>& tape, const Batch& batch, const std::vector<Tensor<T>>& noise,
                           double beta) const;

  // Encoder pass on a padded batch; z is sampled with `noise` (zeros give z = mu).
  std::vector<PosteriorVars<T>> encode(Tape<T>& tape, const Batch& batch, const std::vector<Tensor<T>>& noise) const;

  // Teacher-forced label logits, [16 * B, classes] time-major.
  // UnsupportedInMode in single-latent mode.
  Var<T> discriminate(Tape<T>& tape, Var<T> z, Feature feature, std::span<const int> targets) const;

  // Teacher-forced token logits, [L * B, kVocabSize] time-major.
  Var<T> decode_logits(Tape<T>& tape, const std::vector<Var<T>>& z, const Batch& batch) const;

  // KL term per latent: supervised rows use their cluster label, the rest
  // the marginalized branch plus the categorical KL. Standard-normal KL in
  // vanilla mode. IndexError for labels >= K.
  Var<T> kl_term(Tape<T>& tape, const PosteriorVars<T>& posterior, std::size_t latent,
                 std::span<const int> cluster_labels) const;

  // Inference (posterior means, no tape).
  std::vector<LatentCode> encode_means(std::span<const TokenSeq> sequences) const;
  std::vector<TokenSeq> greedy_decode(std::span<const LatentCode> codes, std::span<const KeyVector> keys) const;
  // Greedy label decoding, [B, 16, classes] logits.
  Tensor<T> predict_label_logits(std::span<const std::vector<double>> z, Feature feature) const;

  // q(c | z) for one latent. UnsupportedInMode in vanilla mode.
  std::vector<double> infer_cluster(std::size_t latent, std::span<const double> z) const;
  // Component means of one latent, [K][z_dim].
  std::vector<std::vector<double>> prior_means(std::size_t latent) const;
  diff::Parameter<T>& prior_mean(std::size_t latent, std::size_t component);

  // Fader ranges of z^d per latent, set after training.
  const std::vector<ZRange>& z_ranges() const { return z_ranges_; }
  void set_z_ranges(std::vector<ZRange> ranges) { z_ranges_ = std::move(ranges); }

  // Copies parameter values into a model of another precision.
  template <typename U>
  FaderNet<U> cast() const;

 private:
  struct Encoder {
    diff::GruCell<T> gru;
    diff::Linear<T> mu;
    diff::Linear<T> log_sigma;
  };
  struct Discriminator {
    diff::Linear<T> init;
    diff::GruCell<T> gru;
    diff::Linear<T> out;
    std::size_t classes = 0;
  };

  Var<T> condition(Tape<T>& tape, const std::vector<Var<T>>& z, std::span<const int> keys) const;
  Var<T> means_matrix(Tape<T>& tape, std::size_t latent) const;

  ModelConfig config_;
  std::unique_ptr<diff::ParameterStore<T>> store_;
  diff::Parameter<T>* embedding_ = nullptr;
  std::vector<Encoder> encoders_;
  std::vector<Discriminator> discriminators_;
  diff::Linear<T> decoder_init_;
  diff::GruCell<T> decoder_gru_;
  diff::Linear<T> decoder_out_;
  std::vector<std::vector<diff::Parameter<T>*>> prior_means_;  // [latent][component], each [1, z_dim]
  std::vector<ZRange> z_ranges_;
};

template <typename T>
template <typename U>
FaderNet<U> FaderNet<T>::cast() const {
  FaderNet<U> out(config_, 0);
  auto& dst = out.params().all();
  const auto& src = store_->all();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].value = src[i].value.template cast<U>();
  out.set_z_ranges(z_ranges_);
  return out;
}

extern template class FaderNet<float>;
extern template class FaderNet<double>;
extern template class FaderNet<long double>;

}  // namespace faders
