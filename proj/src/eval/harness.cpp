// SPDX-License-Identifier: Apache-2.0
#include "faders/eval/harness.hpp"

#include <algorithm>
#include <cmath>

#include "faders/diff/rng.hpp"
#include "faders/error.hpp"
#include "faders/service/io.hpp"

namespace faders {

using nlohmann::json;

ModelCodec::ModelCodec(const FaderNet<float>& model, std::string id) : model_(model), id_(std::move(id)) {
  if (model_.latent_count() != kFeatureCount) {
    throw Error(ErrorCode::UnsupportedInMode, "fader sweeps need one latent per feature");
  }
}

std::vector<LatentCode> ModelCodec::encode(std::span<const CorpusRecord> records) const {
  std::vector<TokenSeq> seqs;
  seqs.reserve(records.size());
  for (const auto& r : records) seqs.push_back(r.tokens);
  return model_.encode_means(seqs);
}

std::vector<Segment> ModelCodec::decode(std::span<const LatentCode> codes, std::span<const KeyVector> keys) const {
  std::vector<Segment> out;
  for (const auto& seq : model_.greedy_decode(codes, keys)) out.push_back(decode_tokens(seq));
  return out;
}

ZRange ModelCodec::z_range(Feature feature) const {
  const auto& ranges = model_.z_ranges();
  const std::size_t i = latent_index(feature);
  if (i >= ranges.size()) throw Error(ErrorCode::IndexError, "checkpoint has no z range for " + std::string(to_string(feature)));
  return ranges[i];
}

SweepResult fader_sweep(const FaderCodec& codec, std::span<const CorpusRecord> test_set, Feature feature,
                        std::size_t T, std::size_t M, std::uint64_t seed) {
  if (test_set.empty()) throw Error(ErrorCode::EmptyCorpus, "empty test set");
  SweepResult res;
  res.feature = feature;
  const ZRange range = codec.z_range(feature);
  res.values = slide_values(range.min, range.max, T);

  std::vector<std::size_t> order(test_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto gen = diff::SeedSequence(seed).stream("sweep.samples");
  diff::shuffle(order.begin(), order.end(), gen);
  order.resize(std::min(M, order.size()));
  res.samples = order;

  std::vector<CorpusRecord> chosen;
  for (std::size_t i : order) chosen.push_back(test_set[i]);
  const auto codes = codec.encode(chosen);
  const std::size_t latent = codec.latent_index(feature);
  const std::size_t d = codec.regularized_dim();

  std::vector<LatentCode> swept;
  std::vector<KeyVector> keys;
  for (std::size_t m = 0; m < chosen.size(); ++m) {
    for (double v : res.values) {
      LatentCode c = codes[m];
      c.z.at(latent).at(d) = v;
      swept.push_back(std::move(c));
      keys.push_back(chosen[m].key);
    }
  }
  const auto decoded = codec.decode(swept, keys);
  res.rhythm.assign(chosen.size(), std::vector<double>(T));
  res.note.assign(chosen.size(), std::vector<double>(T));
  for (std::size_t m = 0; m < chosen.size(); ++m) {
    for (std::size_t t = 0; t < T; ++t) {
      const Densities dens = densities(decoded[m * T + t]);
      res.rhythm[m][t] = dens.rhythm_density;
      res.note[m][t] = dens.note_density;
    }
  }
  return res;
}

namespace {

Matrix scaled(const Matrix& m, double s) {
  Matrix out = m;
  for (auto& row : out) {
    for (auto& v : row) v /= s;
  }
  return out;
}

const Matrix& own(const SweepResult& s) { return s.feature == Feature::Rhythm ? s.rhythm : s.note; }
const Matrix& other(const SweepResult& s) { return s.feature == Feature::Rhythm ? s.note : s.rhythm; }

FeatureScores score(const SweepResult& s) {
  const double own_scale = s.feature == Feature::Rhythm ? 1.0 : kNoteDensityScale;
  const double other_scale = s.feature == Feature::Rhythm ? kNoteDensityScale : 1.0;
  FeatureScores f;
  f.consistency = consistency_score(scaled(own(s), own_scale));
  f.restrictiveness = restrictiveness_score(scaled(other(s), other_scale));
  std::vector<double> x, y;
  for (const auto& row : own(s)) {
    for (std::size_t t = 0; t < row.size(); ++t) {
      x.push_back(s.values[t]);
      y.push_back(row[t]);
    }
  }
  f.linearity = linearity_score(x, y);
  return f;
}

}  // namespace

EvalReport score_sweeps(const SweepResult& rhythm_sweep, const SweepResult& note_sweep) {
  EvalReport r;
  r.scores[0] = score(rhythm_sweep);
  r.scores[1] = score(note_sweep);
  r.T = rhythm_sweep.values.size();
  r.M = rhythm_sweep.samples.size();
  return r;
}

EvalReport evaluate(const FaderCodec& codec, std::span<const CorpusRecord> test_set, std::size_t T, std::size_t M,
                    std::uint64_t seed) {
  const auto rhythm = fader_sweep(codec, test_set, Feature::Rhythm, T, M, seed);
  const auto note = fader_sweep(codec, test_set, Feature::Note, T, M, seed);
  EvalReport r = score_sweeps(rhythm, note);
  r.seed = seed;
  r.checkpoint_id = codec.id();
  return r;
}

json report_to_json(const EvalReport& report) {
  json features = json::object();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto& s = report.scores[i];
    features[std::string(to_string(Feature(i)))] = {
        {"consistency", s.consistency}, {"restrictiveness", s.restrictiveness}, {"linearity", s.linearity}};
  }
  return {{"features", features},
          {"T", report.T},
          {"M", report.M},
          {"seed", report.seed},
          {"checkpoint_id", report.checkpoint_id}};
}

std::string reports_csv(const std::vector<std::pair<std::string, EvalReport>>& reports) {
  std::string out = csv_row({"model", "feature", "consistency", "restrictiveness", "linearity", "T", "M", "seed",
                             "checkpoint_id"});
  for (const auto& [name, r] : reports) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto& s = r.scores[i];
      out += csv_row({name, std::string(to_string(Feature(i))), format_double(s.consistency),
                      format_double(s.restrictiveness), format_double(s.linearity), std::to_string(r.T),
                      std::to_string(r.M), std::to_string(r.seed), r.checkpoint_id});
    }
  }
  return out;
}

std::vector<double> combined_cluster_posterior(const FaderNet<float>& model, const LatentCode& code) {
  const std::size_t K = model.config().clusters;
  std::vector<double> logp(K, 0.0);
  for (std::size_t i = 0; i < model.latent_count(); ++i) {
    const auto q = model.infer_cluster(i, code.z.at(i));
    for (std::size_t k = 0; k < K; ++k) logp[k] += std::log(std::max(q[k], 1e-300));
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  double sum = 0.0;
  for (auto& v : logp) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : logp) v /= sum;
  return logp;
}

ClusterScore cluster_accuracy(const FaderNet<float>& model, std::span<const CorpusRecord> records) {
  std::vector<TokenSeq> seqs;
  std::vector<int> truth;
  for (const auto& r : records) {
    const auto label = r.true_class ? r.true_class : r.arousal_class;
    if (!label) continue;
    seqs.push_back(r.tokens);
    truth.push_back(*label);
  }
  if (seqs.empty()) throw Error(ErrorCode::InsufficientSamples, "no labelled records to score");
  const auto codes = model.encode_means(seqs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto q = combined_cluster_posterior(model, codes[i]);
    const auto arg = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
    if (arg == truth[i]) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(codes.size()), codes.size()};
}

}  // namespace faders
