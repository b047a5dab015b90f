// SPDX-License-Identifier: Apache-2.0
#include "faders/model/fadernet.hpp"

#include <algorithm>
#include <cmath>

#include "faders/diff/rng.hpp"
#include "faders/error.hpp"

namespace faders {

using diff::RowMatrix;

namespace {

constexpr std::size_t kInferenceChunk = 512;

template <typename T>
Tensor<T> one_hot_rows(std::span<const int> classes, std::size_t width) {
  Tensor<T> t = Tensor<T>::matrix(classes.size(), width);
  for (std::size_t r = 0; r < classes.size(); ++r) {
    if (classes[r] >= 0) t(r, static_cast<std::size_t>(classes[r])) = T(1);
  }
  return t;
}

template <typename T>
RowMatrix<T> tanh_of(RowMatrix<T> m) {
  m = m.array().tanh().matrix();
  return m;
}

std::size_t class_count(Feature f) { return f == Feature::Rhythm ? kRhythmClasses : kNoteClasses; }

}  // namespace

Batch Batch::from_records(std::span<const CorpusRecord> records) {
  std::vector<const CorpusRecord*> ptrs;
  ptrs.reserve(records.size());
  for (const auto& r : records) ptrs.push_back(&r);
  return from_records(std::span<const CorpusRecord* const>(ptrs));
}

Batch Batch::from_records(std::span<const CorpusRecord* const> records) {
  Batch b;
  b.size = records.size();
  for (const auto* r : records) {
    if (r->tokens.size() > kMaxTokens) {
      throw Error(ErrorCode::TokenOverflow, std::to_string(r->tokens.size()) + " tokens in batch record");
    }
    b.max_len = std::max(b.max_len, r->tokens.size());
  }
  b.max_len = std::max<std::size_t>(b.max_len, 1);
  const std::size_t B = b.size;
  b.tokens.assign(b.max_len * B, kPadId);
  b.rhythm_targets.resize(kStepsPerSegment * B);
  b.note_targets.resize(kStepsPerSegment * B);
  for (std::size_t i = 0; i < B; ++i) {
    const auto& r = *records[i];
    b.lengths.push_back(static_cast<int>(r.tokens.size()));
    for (std::size_t t = 0; t < r.tokens.size(); ++t) b.tokens[t * B + i] = r.tokens[t].id();
    for (std::size_t s = 0; s < static_cast<std::size_t>(kStepsPerSegment); ++s) {
      b.rhythm_targets[s * B + i] = static_cast<int>(r.rhythm.steps[s]);
      b.note_targets[s * B + i] = r.note.steps[s];
    }
    b.keys.push_back(r.key.index);
    b.rhythm_density.push_back(r.densities.rhythm_density);
    b.note_density.push_back(r.densities.note_density);
    b.cluster_labels.push_back(r.arousal_class.value_or(-1));
  }
  return b;
}

constexpr double kPriorMeanInitStd = 1e-3;

template <typename T>
FaderNet<T>::FaderNet(const ModelConfig& config, std::uint64_t seed)
    : config_(config), store_(std::make_unique<diff::ParameterStore<T>>()) {
  config_.validate();
  auto gen = diff::SeedSequence(seed).stream("init");
  const std::size_t E = config_.embed_dim;
  const std::size_t H = config_.hidden_dim;
  const std::size_t Z = config_.z_dim;
  embedding_ = &store_->add("embedding", diff::xavier_uniform<T>(kVocabSize, E, gen));
  const std::size_t latents = config_.latent_count();
  for (std::size_t i = 0; i < latents; ++i) {
    const std::string name = latents == 1 ? "encoder" : "encoder." + std::string(to_string(Feature(i)));
    Encoder enc{diff::GruCell<T>::create(*store_, name + ".gru", E, H, gen),
                diff::Linear<T>::create(*store_, name + ".mu", H, Z, gen),
                diff::Linear<T>::create(*store_, name + ".log_sigma", H, Z, gen)};
    encoders_.push_back(enc);
  }
  if (config_.has_discriminators()) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto f = Feature(i);
      const std::string name = "discriminator." + std::string(to_string(f));
      const std::size_t C = class_count(f);
      Discriminator d{diff::Linear<T>::create(*store_, name + ".init", Z, H, gen),
                      diff::GruCell<T>::create(*store_, name + ".gru", C + Z, H, gen),
                      diff::Linear<T>::create(*store_, name + ".out", H, C, gen), C};
      discriminators_.push_back(d);
    }
  }
  const std::size_t cond = Z * latents + kKeyClasses;
  decoder_init_ = diff::Linear<T>::create(*store_, "decoder.init", cond, H, gen);
  decoder_gru_ = diff::GruCell<T>::create(*store_, "decoder.gru", E + cond, H, gen);
  decoder_out_ = diff::Linear<T>::create(*store_, "decoder.out", H, kVocabSize, gen);

  // Component means start almost coincident at the origin: the unsupervised branch pulls them apart
  // in proportion to their separation, so labelled rows decide which component takes which class.
  std::normal_distribution<double> jitter(0.0, kPriorMeanInitStd);
  for (std::size_t i = 0; i < latents; ++i) {
    const std::string name = latents == 1 ? "prior" : "prior." + std::string(to_string(Feature(i)));
    std::vector<diff::Parameter<T>*> row;
    for (std::size_t k = 0; k < config_.clusters; ++k) {
      Tensor<T> mk = Tensor<T>::matrix(1, Z);
      for (std::size_t c = 0; c < Z; ++c) mk.data[c] = static_cast<T>(jitter(gen));
      row.push_back(&store_->add(name + ".mean" + std::to_string(k), std::move(mk)));
    }
    prior_means_.push_back(std::move(row));
  }
}

template <typename T>
std::vector<PosteriorVars<T>> FaderNet<T>::encode(Tape<T>& tape, const Batch& batch,
                                                  const std::vector<Tensor<T>>& noise) const {
  const std::size_t B = batch.size;
  const std::size_t L = batch.max_len;
  if (noise.size() != encoders_.size()) throw Error(ErrorCode::ShapeError, "encode: one noise tensor per latent");
  Var<T> table = tape.param(*embedding_);
  std::vector<Var<T>> inputs;
  std::vector<std::vector<T>> masks(L);
  inputs.reserve(L);
  for (std::size_t t = 0; t < L; ++t) {
    inputs.push_back(diff::embedding(tape, table, std::span<const int>(batch.tokens).subspan(t * B, B)));
    bool any_pad = false;
    masks[t].resize(B);
    for (std::size_t b = 0; b < B; ++b) {
      masks[t][b] = static_cast<int>(t) < batch.lengths[b] ? T(1) : T(0);
      any_pad = any_pad || masks[t][b] == T(0);
    }
    if (!any_pad) masks[t].clear();
  }
  std::vector<PosteriorVars<T>> out;
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    const auto& enc = encoders_[i];
    Var<T> h = tape.constant(Tensor<T>::matrix(B, config_.hidden_dim));
    for (std::size_t t = 0; t < L; ++t) h = diff::gru_step(tape, enc.gru, inputs[t], h, std::span<const T>(masks[t]));
    PosteriorVars<T> p;
    p.mu = enc.mu(tape, h);
    p.log_sigma = enc.log_sigma(tape, h);
    p.z = diff::gaussian_sample(tape, p.mu, p.log_sigma, noise[i]);
    out.push_back(p);
  }
  return out;
}

template <typename T>
Var<T> FaderNet<T>::condition(Tape<T>& tape, const std::vector<Var<T>>& z, std::span<const int> keys) const {
  std::vector<Var<T>> parts = z;
  parts.push_back(tape.constant(one_hot_rows<T>(keys, kKeyClasses)));
  return diff::concat_cols(tape, parts);
}

template <typename T>
Var<T> FaderNet<T>::decode_logits(Tape<T>& tape, const std::vector<Var<T>>& z, const Batch& batch) const {
  const std::size_t B = batch.size;
  const std::size_t L = batch.max_len;
  Var<T> table = tape.param(*embedding_);
  Var<T> cond = condition(tape, z, batch.keys);
  Var<T> h = diff::tanh(tape, decoder_init_(tape, cond));
  std::vector<Var<T>> hidden;
  hidden.reserve(L);
  std::vector<int> prev(B, kStartId);
  for (std::size_t t = 0; t < L; ++t) {
    if (t > 0) std::copy_n(batch.tokens.begin() + static_cast<std::ptrdiff_t>((t - 1) * B), B, prev.begin());
    Var<T> x = diff::concat_cols(tape, {diff::embedding(tape, table, std::span<const int>(prev)), cond});
    h = diff::gru_step(tape, decoder_gru_, x, h);
    hidden.push_back(h);
  }
  return decoder_out_(tape, diff::stack_rows(tape, hidden));
}

template <typename T>
Var<T> FaderNet<T>::discriminate(Tape<T>& tape, Var<T> z, Feature feature, std::span<const int> targets) const {
  if (discriminators_.empty()) {
    throw Error(ErrorCode::UnsupportedInMode, "no discriminators in " + std::string(to_string(config_.mode)));
  }
  const auto& d = discriminators_[static_cast<std::size_t>(feature)];
  const std::size_t B = tape.value(z).rows();
  if (targets.size() != kStepsPerSegment * B) throw Error(ErrorCode::ShapeError, "discriminate: target length");
  Var<T> h = diff::tanh(tape, d.init(tape, z));
  std::vector<Var<T>> hidden;
  std::vector<int> prev(B, -1);
  for (std::size_t s = 0; s < static_cast<std::size_t>(kStepsPerSegment); ++s) {
    if (s > 0) std::copy_n(targets.begin() + static_cast<std::ptrdiff_t>((s - 1) * B), B, prev.begin());
    Var<T> x = diff::concat_cols(tape, {tape.constant(one_hot_rows<T>(prev, d.classes)), z});
    h = diff::gru_step(tape, d.gru, x, h);
    hidden.push_back(h);
  }
  return d.out(tape, diff::stack_rows(tape, hidden));
}

template <typename T>
Var<T> FaderNet<T>::means_matrix(Tape<T>& tape, std::size_t latent) const {
  std::vector<Var<T>> rows;
  for (auto* p : prior_means_[latent]) rows.push_back(tape.param(*p));
  return diff::stack_rows(tape, rows);
}

template <typename T>
Var<T> FaderNet<T>::kl_term(Tape<T>& tape, const PosteriorVars<T>& post, std::size_t latent,
                            std::span<const int> cluster_labels) const {
  const std::size_t B = tape.value(post.mu).rows();
  if (!config_.has_mixture_prior()) {
    Var<T> zero = tape.constant(Tensor<T>::matrix(1, config_.z_dim));
    return diff::kl_diag_gaussians(tape, post.mu, post.log_sigma, zero, T(1));
  }
  if (cluster_labels.size() != B) throw Error(ErrorCode::ShapeError, "kl_term: one label slot per row");
  const std::size_t K = config_.clusters;
  const T sigma_p = static_cast<T>(std::sqrt(config_.prior_variance));
  std::vector<int> labels(B, 0);
  Tensor<T> sup_mask = Tensor<T>::matrix(B, 1);
  Tensor<T> unsup_mask = Tensor<T>::matrix(B, 1);
  bool any_sup = false;
  bool any_unsup = false;
  for (std::size_t b = 0; b < B; ++b) {
    const int c = cluster_labels[b];
    if (c >= static_cast<int>(K)) {
      throw Error(ErrorCode::IndexError, "cluster label " + std::to_string(c) + " >= K=" + std::to_string(K));
    }
    if (c >= 0) {
      labels[b] = c;
      sup_mask.data[b] = T(1);
      any_sup = true;
    } else {
      unsup_mask.data[b] = T(1);
      any_unsup = true;
    }
  }
  std::vector<Var<T>> per_component;
  for (std::size_t k = 0; k < K; ++k) {
    per_component.push_back(
        diff::kl_rows(tape, post.mu, post.log_sigma, tape.param(*prior_means_[latent][k]), sigma_p));
  }
  Var<T> kls = diff::concat_cols(tape, per_component);  // [B, K]

  std::optional<Var<T>> rows;
  if (any_sup) {
    Var<T> sup = diff::gather_cols(tape, kls, std::span<const int>(labels));
    rows = any_unsup ? diff::mul(tape, sup, tape.constant(std::move(sup_mask))) : sup;
  }
  if (any_unsup) {
    Var<T> logits = diff::mixture_log_joint(tape, post.z, means_matrix(tape, latent), static_cast<T>(config_.prior_variance));
    Var<T> q = diff::softmax_rows(tape, logits);
    Var<T> log_q = diff::log_softmax_rows(tape, logits);
    Var<T> marginal = diff::row_sum(tape, diff::mul(tape, q, kls));
    // KL(q(c|X) || uniform) = sum_k q log q + log K
    Var<T> categorical = diff::add_scalar(tape, diff::row_sum(tape, diff::mul(tape, q, log_q)),
                                          static_cast<T>(std::log(static_cast<double>(K))));
    Var<T> unsup = diff::add(tape, marginal, categorical);
    if (any_sup) unsup = diff::mul(tape, unsup, tape.constant(std::move(unsup_mask)));
    rows = rows ? diff::add(tape, *rows, unsup) : unsup;
  }
  return diff::mean_all(tape, *rows);
}

template <typename T>
ForwardResult<T> FaderNet<T>::forward(Tape<T>& tape, const Batch& batch, const std::vector<Tensor<T>>& noise,
                                      double beta) const {
  ForwardResult<T> res;
  res.posteriors = encode(tape, batch, noise);
  std::vector<Var<T>> zs;
  for (const auto& p : res.posteriors) zs.push_back(p.z);

  const std::size_t B = batch.size;
  std::vector<int> targets(batch.tokens.size());
  for (std::size_t t = 0; t < batch.max_len; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      targets[t * B + b] = static_cast<int>(t) < batch.lengths[b] ? batch.tokens[t * B + b] : -1;
    }
  }
  Var<T> recon = diff::softmax_cross_entropy(tape, decode_logits(tape, zs, batch), std::span<const int>(targets));
  auto& bd = res.breakdown;
  bd.beta = beta;
  bd.reconstruction = tape.value(recon).item();

  std::vector<Var<T>> kls;
  for (std::size_t i = 0; i < res.posteriors.size(); ++i) {
    kls.push_back(kl_term(tape, res.posteriors[i], i, batch.cluster_labels));
  }
  bd.kl_rhythm = tape.value(kls[0]).item();
  if (kls.size() > 1) bd.kl_note = tape.value(kls[1]).item();
  Var<T> kl_sum = kls.size() > 1 ? diff::add(tape, kls[0], kls[1]) : kls[0];
  Var<T> total = diff::add(tape, recon, diff::scale(tape, kl_sum, static_cast<T>(beta)));

  if (config_.has_latent_regularization()) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto& target = i == 0 ? batch.rhythm_density : batch.note_density;
      Var<T> zd = diff::column(tape, res.posteriors[i].z, config_.regularized_dim);
      Var<T> reg = diff::latent_reg_loss(tape, zd, std::span<const double>(target));
      (i == 0 ? bd.reg_rhythm : bd.reg_note) = tape.value(reg).item();
      total = diff::add(tape, total, reg);
    }
  }
  if (config_.has_discriminators()) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto& target = i == 0 ? batch.rhythm_targets : batch.note_targets;
      Var<T> logits = discriminate(tape, res.posteriors[i].z, Feature(i), target);
      Var<T> ce = diff::softmax_cross_entropy(tape, logits, std::span<const int>(target));
      (i == 0 ? bd.disc_rhythm : bd.disc_note) = tape.value(ce).item();
      total = diff::add(tape, total, ce);
    }
  }
  bd.total = tape.value(total).item();
  res.total = total;
  return res;
}

template <typename T>
std::vector<LatentCode> FaderNet<T>::encode_means(std::span<const TokenSeq> sequences) const {
  std::vector<LatentCode> out(sequences.size());
  const auto& table = embedding_->value;
  const auto E = static_cast<Eigen::Index>(config_.embed_dim);
  const auto H = static_cast<Eigen::Index>(config_.hidden_dim);
  for (std::size_t start = 0; start < sequences.size(); start += kInferenceChunk) {
    const std::size_t B = std::min(kInferenceChunk, sequences.size() - start);
    std::size_t L = 0;
    for (std::size_t b = 0; b < B; ++b) {
      const auto len = sequences[start + b].size();
      if (len > kMaxTokens) throw Error(ErrorCode::TokenOverflow, std::to_string(len) + " tokens");
      L = std::max(L, len);
    }
    for (std::size_t i = 0; i < encoders_.size(); ++i) {
      const auto& enc = encoders_[i];
      RowMatrix<T> h = RowMatrix<T>::Zero(static_cast<Eigen::Index>(B), H);
      RowMatrix<T> x(static_cast<Eigen::Index>(B), E);
      for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t b = 0; b < B; ++b) {
          const auto& seq = sequences[start + b];
          const int id = t < seq.size() ? seq[t].id() : kPadId;
          x.row(static_cast<Eigen::Index>(b)) = table.mat().row(id);
        }
        RowMatrix<T> next = diff::gru_forward(enc.gru, x, h);
        for (std::size_t b = 0; b < B; ++b) {
          if (t < sequences[start + b].size()) h.row(static_cast<Eigen::Index>(b)) = next.row(static_cast<Eigen::Index>(b));
        }
      }
      const RowMatrix<T> mu = enc.mu.forward(h);
      for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> z(config_.z_dim);
        for (std::size_t c = 0; c < config_.z_dim; ++c) z[c] = mu(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c));
        out[start + b].z.push_back(std::move(z));
      }
    }
  }
  return out;
}

template <typename T>
std::vector<TokenSeq> FaderNet<T>::greedy_decode(std::span<const LatentCode> codes,
                                                 std::span<const KeyVector> keys) const {
  if (codes.size() != keys.size()) throw Error(ErrorCode::ShapeError, "greedy_decode: one key per code");
  const std::size_t latents = encoders_.size();
  const std::size_t Z = config_.z_dim;
  const std::size_t cond_width = Z * latents + kKeyClasses;
  const auto E = static_cast<Eigen::Index>(config_.embed_dim);
  const auto& table = embedding_->value;
  std::vector<TokenSeq> out(codes.size());
  for (std::size_t start = 0; start < codes.size(); start += kInferenceChunk) {
    const std::size_t B = std::min(kInferenceChunk, codes.size() - start);
    RowMatrix<T> cond = RowMatrix<T>::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(cond_width));
    for (std::size_t b = 0; b < B; ++b) {
      const auto& code = codes[start + b];
      if (code.z.size() != latents) throw Error(ErrorCode::ShapeError, "greedy_decode: latent count");
      for (std::size_t i = 0; i < latents; ++i) {
        if (code.z[i].size() != Z) throw Error(ErrorCode::ShapeError, "greedy_decode: latent width");
        for (std::size_t c = 0; c < Z; ++c) cond(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i * Z + c)) = static_cast<T>(code.z[i][c]);
      }
      const int key = keys[start + b].index;
      if (key < 0 || key >= kKeyClasses) throw Error(ErrorCode::IndexError, "key index " + std::to_string(key));
      cond(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(latents * Z + static_cast<std::size_t>(key))) = T(1);
    }
    RowMatrix<T> h = tanh_of<T>(decoder_init_.forward(cond));
    RowMatrix<T> x(static_cast<Eigen::Index>(B), E + static_cast<Eigen::Index>(cond_width));
    x.rightCols(static_cast<Eigen::Index>(cond_width)) = cond;
    std::vector<int> prev(B, kStartId);
    std::vector<int> elapsed(B, 0);
    std::vector<bool> done(B, false);
    std::size_t remaining = B;
    for (std::size_t step = 0; step < kMaxTokens && remaining > 0; ++step) {
      for (std::size_t b = 0; b < B; ++b) x.row(static_cast<Eigen::Index>(b)).head(E) = table.mat().row(prev[b]);
      h = diff::gru_forward(decoder_gru_, x, h);
      const RowMatrix<T> logits = decoder_out_.forward(h);
      for (std::size_t b = 0; b < B; ++b) {
        if (done[b]) continue;
        int best = kNoteOnBase;
        T best_v = logits(static_cast<Eigen::Index>(b), kNoteOnBase);
        for (int id = kNoteOnBase + 1; id < kVocabSize; ++id) {
          const T v = logits(static_cast<Eigen::Index>(b), id);
          if (v > best_v) {
            best_v = v;
            best = id;
          }
        }
        const Token tok = Token::from_id(best);
        out[start + b].push_back(tok);
        prev[b] = best;
        if (tok.kind == TokenKind::TimeShift) elapsed[b] += tok.value;
        if (elapsed[b] >= kStepsPerSegment) {
          done[b] = true;
          --remaining;
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> FaderNet<T>::predict_label_logits(std::span<const std::vector<double>> z, Feature feature) const {
  if (discriminators_.empty()) {
    throw Error(ErrorCode::UnsupportedInMode, "no discriminators in " + std::string(to_string(config_.mode)));
  }
  const auto& d = discriminators_[static_cast<std::size_t>(feature)];
  const std::size_t B = z.size();
  const std::size_t Z = config_.z_dim;
  const std::size_t C = d.classes;
  RowMatrix<T> zm(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(Z));
  for (std::size_t b = 0; b < B; ++b) {
    if (z[b].size() != Z) throw Error(ErrorCode::ShapeError, "predict_label_logits: latent width");
    for (std::size_t c = 0; c < Z; ++c) zm(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) = static_cast<T>(z[b][c]);
  }
  Tensor<T> out({B, static_cast<std::size_t>(kStepsPerSegment), C});
  RowMatrix<T> h = tanh_of<T>(d.init.forward(zm));
  RowMatrix<T> x = RowMatrix<T>::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(C + Z));
  x.rightCols(static_cast<Eigen::Index>(Z)) = zm;
  for (std::size_t s = 0; s < static_cast<std::size_t>(kStepsPerSegment); ++s) {
    h = diff::gru_forward(d.gru, x, h);
    const RowMatrix<T> logits = d.out.forward(h);
    x.leftCols(static_cast<Eigen::Index>(C)).setZero();
    for (std::size_t b = 0; b < B; ++b) {
      Eigen::Index arg = 0;
      logits.row(static_cast<Eigen::Index>(b)).maxCoeff(&arg);
      x(static_cast<Eigen::Index>(b), arg) = T(1);
      for (std::size_t c = 0; c < C; ++c) out.data[(b * kStepsPerSegment + s) * C + c] = logits(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

template <typename T>
std::vector<double> FaderNet<T>::infer_cluster(std::size_t latent, std::span<const double> z) const {
  if (!config_.has_mixture_prior()) {
    throw Error(ErrorCode::UnsupportedInMode, "cluster inference needs a mixture prior");
  }
  if (latent >= prior_means_.size()) throw Error(ErrorCode::IndexError, "latent " + std::to_string(latent));
  if (z.size() != config_.z_dim) throw Error(ErrorCode::ShapeError, "infer_cluster: latent width");
  const std::size_t K = config_.clusters;
  std::vector<double> logp(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& mean = prior_means_[latent][k]->value.data;
    double sq = 0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      const double d = z[c] - static_cast<double>(mean[c]);
      sq += d * d;
    }
    logp[k] = -std::log(static_cast<double>(K)) - 0.5 * sq / config_.prior_variance;
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  double sum = 0;
  for (auto& v : logp) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : logp) v /= sum;
  return logp;
}

template <typename T>
std::vector<std::vector<double>> FaderNet<T>::prior_means(std::size_t latent) const {
  if (latent >= prior_means_.size()) throw Error(ErrorCode::IndexError, "latent " + std::to_string(latent));
  std::vector<std::vector<double>> out;
  for (auto* p : prior_means_[latent]) out.emplace_back(p->value.data.begin(), p->value.data.end());
  return out;
}

template <typename T>
diff::Parameter<T>& FaderNet<T>::prior_mean(std::size_t latent, std::size_t component) {
  return *prior_means_.at(latent).at(component);
}

template class FaderNet<float>;
template class FaderNet<double>;
template class FaderNet<long double>;

}  // namespace faders
