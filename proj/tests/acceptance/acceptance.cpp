// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per primary criterion. Experiments
// share one seed-fixed synthetic corpus and one trained GM-VAE.
//
// FADERS_ACCEPTANCE_ONLY=<name>[,<name>...] restricts the run.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../common/grad_cases.hpp"
#include "../common/stub_codec.hpp"
#include "faders/eval/harness.hpp"
#include "faders/eval/metrics.hpp"
#include "faders/model/checkpoint.hpp"
#include "faders/model/train.hpp"
#include "faders/service/io.hpp"
#include "faders/service/service.hpp"
#include "faders/transfer.hpp"

using namespace faders;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr std::size_t kCorpusSize = 2000;
constexpr double kLabelledFraction = 0.01;
constexpr std::size_t kSweepT = 8;
constexpr std::size_t kSweepM = 100;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Shared experiment state, built on first use.

struct Experiment {
  CorpusSplit split;
  std::optional<TrainResult> gm;
  std::optional<TrainResult> no_reg;
  std::optional<TrainResult> single;
};

Experiment& experiment() {
  static Experiment e = [] {
    Experiment x;
    x.split = faders::split(synth_corpus(kCorpusSize, kLabelledFraction, kSeed), kSeed);
    return x;
  }();
  return e;
}

ModelConfig desk(ModelMode mode) {
  ModelConfig c = ModelConfig::desk();
  c.mode = mode;
  return c;
}

const FaderNet<float>& trained(std::optional<TrainResult>& slot, const ModelConfig& config, const char* label) {
  if (!slot) {
    const auto t0 = std::chrono::steady_clock::now();
    slot.emplace(train(config, experiment().split.train, kSeed));
    std::printf("  [train] %s: %llu steps in %.1fs, final loss %.4f\n", label,
                static_cast<unsigned long long>(config.train_steps), seconds_since(t0),
                slot->log.back().loss.total);
    std::fflush(stdout);
  }
  return slot->model;
}

const FaderNet<float>& gm_model() { return trained(experiment().gm, desk(ModelMode::GmVae), "gm_vae"); }

const FaderNet<float>& no_reg_model() {
  ModelConfig c = desk(ModelMode::GmVae);
  c.latent_regularization = false;
  return trained(experiment().no_reg, c, "gm_vae without latent regularization");
}

const FaderNet<float>& single_model() {
  return trained(experiment().single, desk(ModelMode::AblationSingleLatent), "ablation_single_latent");
}

// ---------------------------------------------------------------------------
// Gradient suite.

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t coords = 0, cases = 0;
  auto record = [&](testing::GradCase& c, std::size_t samples) {
    const auto r = testing::run_case(c, samples);
    coords += r.coordinates;
    ++cases;
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = c.name + ":" + r.worst;
    }
  };
  for (auto& c : testing::primitive_cases()) record(c, 64);
  // The mixture model exercises every loss term; the other modes differ only
  // in their KL and auxiliary heads and get a lighter sample.
  const std::pair<ModelMode, std::size_t> modes[] = {
      {ModelMode::GmVae, 16}, {ModelMode::VanillaVae, 8}, {ModelMode::AblationSingleLatent, 8}};
  for (const auto& [mode, samples] : modes) {
    auto c = testing::total_loss_case(desk(mode));
    record(c, samples);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 120.0, std::to_string(cases) + " cases, " + std::to_string(coords) +
                                             " coordinates, max rel err " + fmt(worst * 1e6, 3) + "e-6 at " +
                                             worst_name + ", " + fmt(secs, 1) + "s"};
}

// ---------------------------------------------------------------------------
// Oracle equivalence.

Segment random_segment(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> count(1, 12), pitch(21, 108), onset(0, 15);
  std::vector<NoteEvent> notes;
  const int n = count(gen);
  for (int i = 0; i < n; ++i) {
    const int o = onset(gen);
    std::uniform_int_distribution<int> dur(1, 16 - o);
    notes.push_back({pitch(gen), o, dur(gen)});
  }
  return Segment::from_notes(std::move(notes));
}

// Brute force: walk every step and every note.
Densities brute_densities(const Segment& s) {
  int onset_steps = 0, sounding = 0;
  for (int step = 0; step < 16; ++step) {
    bool onset = false;
    int here = 0;
    for (const auto& n : s.notes()) {
      if (n.onset_step == step) onset = true;
      if (n.onset_step <= step && step < n.onset_step + n.duration_steps) ++here;
    }
    onset_steps += onset ? 1 : 0;
    sounding += std::min(here, 15);
  }
  return {onset_steps / 16.0, sounding / 16.0};
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(kSeed);
  std::size_t checked = 0, density_mismatch = 0, roundtrip_fail = 0;
  while (checked < 1000) {
    const Segment s = random_segment(gen);
    TokenSeq tokens;
    try {
      tokens = encode_tokens(s);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::TokenOverflow) continue;
      throw;
    }
    ++checked;
    const Densities oracle = brute_densities(s);
    const CorpusRecord rec = make_record(s);
    if (!(rec.densities == oracle) || !(densities(s) == oracle)) ++density_mismatch;
    const Segment back = decode_tokens(tokens_from_ids(token_ids(tokens)));
    if (!(back == s) || !(densities(back) == oracle)) ++roundtrip_fail;
  }
  const double secs = seconds_since(t0);
  return {density_mismatch == 0 && roundtrip_fail == 0 && secs < 30.0,
          std::to_string(checked) + " segments, " + std::to_string(density_mismatch) + " density mismatches, " +
              std::to_string(roundtrip_fail) + " round-trip failures, " + fmt(secs, 2) + "s"};
}

// ---------------------------------------------------------------------------
// Metric correctness.

Outcome metric_correctness() {
  std::vector<std::string> failures;
  auto near = [&](const char* name, double got, double want) {
    if (!(std::abs(got - want) <= 1e-9)) failures.push_back(std::string(name) + "=" + fmt(got, 12));
  };
  auto vec_near = [&](const char* name, const std::vector<double>& got, const std::vector<double>& want) {
    bool ok = got.size() == want.size();
    for (std::size_t i = 0; ok && i < got.size(); ++i) ok = std::abs(got[i] - want[i]) <= 1e-9;
    if (!ok) failures.emplace_back(name);
  };
  vec_near("slide(0,1,8)", slide_values(0, 1, 8), {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0});
  vec_near("slide(5,5,8)", slide_values(5, 5, 8), std::vector<double>(8, 5.0));
  vec_near("slide(-1,1,4)", slide_values(-1, 1, 4), {-0.5, 0.0, 0.5, 1.0});

  near("consistency.equal", consistency_score({{0.4, 0.1}, {0.4, 0.1}, {0.4, 0.1}}), 1.0);
  near("consistency.halves", consistency_score({{0, 1}, {1, 0}, {0, 1}, {1, 0}}), 0.5);
  near("consistency.3x2", consistency_score({{1, 2}, {2, 4}, {3, 6}}),
       1.0 - (std::sqrt(2.0 / 3.0) + std::sqrt(8.0 / 3.0)) / 2.0);
  near("restrictiveness.rows", restrictiveness_score({{0.2, 0.2, 0.2}, {0.7, 0.7, 0.7}}), 1.0);
  near("restrictiveness.alternating", restrictiveness_score({{0, 1, 0, 1}, {1, 1, 1, 1}}), 0.75);
  near("restrictiveness.2x4", restrictiveness_score({{0, 0, 0, 4}, {2, 2, 2, 2}}), 1.0 - std::sqrt(3.0) / 2.0);
  const std::vector<double> x = {0, 1, 2, 3};
  near("linearity.exact", linearity_score(x, std::vector<double>{1, 3, 5, 7}), 1.0);
  near("linearity.constant", linearity_score(x, std::vector<double>{2, 2, 2, 2}), 0.0);
  // normal equations: a = Sxy / Sxx = 5.5 / 5, R^2 = a Sxy / Syy
  near("linearity.4pt", linearity_score(x, std::vector<double>{1, 3, 2, 5}), 1.1 * 5.5 / 8.75);

  // Identity stub: a decoder that ignores z. Rows are flat on any test set;
  // a homogeneous test set also flattens the columns.
  const auto recs = synth_corpus(200, 0.0, kSeed);
  const std::vector<CorpusRecord> diverse(recs.begin(), recs.begin() + 40);
  const auto diverse_report = evaluate(testing::IdentityStub(diverse), diverse, kSweepT, 40, kSeed);
  const std::vector<CorpusRecord> same(30, recs[0]);
  const auto same_report = evaluate(testing::IdentityStub(same), same, kSweepT, 30, kSeed);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    near("stub.restrictiveness", diverse_report.scores[f].restrictiveness, 1.0);
    near("stub.consistency", same_report.scores[f].consistency, 1.0);
    near("stub.restrictiveness.same", same_report.scores[f].restrictiveness, 1.0);
  }
  std::string detail = "slide, consistency, restrictiveness, linearity examples and identity stub";
  if (!failures.empty()) {
    detail = "mismatches:";
    for (const auto& f : failures) detail += " " + f;
  }
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------
// Regularization efficacy.

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

// Serving-path mirror: sweep the rhythm fader through /fade and correlate
// with the decoded rhythm density, pooled over test segments.
double fade_spearman(const FaderNet<float>& model) {
  Service service;
  service.set_checkpoint(std::make_shared<LoadedCheckpoint>(LoadedCheckpoint{model.cast<float>(), "acceptance", {}}));
  std::vector<double> faders_v, dens;
  const auto& test = experiment().split.test;
  for (std::size_t i = 0; i < std::min<std::size_t>(20, test.size()); ++i) {
    for (int k = 0; k <= 10; ++k) {
      const double f = k / 10.0;
      const nlohmann::json body = {{"notes", segment_to_json(test[i].segment)}, {"rhythm_fader", f}};
      const auto r = service.handle("POST", "/fade", body.dump());
      if (r.status != 200) continue;
      faders_v.push_back(f);
      dens.push_back(r.body.at("densities").at("rhythm_density").get<double>());
    }
  }
  return spearman(faders_v, dens);
}

Outcome regularization_efficacy() {
  const auto& test = experiment().split.test;
  const auto reg = evaluate(ModelCodec(gm_model(), "gm_vae"), test, kSweepT, kSweepM, kSeed);
  const auto abl = evaluate(ModelCodec(no_reg_model(), "no_reg"), test, kSweepT, kSweepM, kSeed);
  bool pass = true;
  std::string detail;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const double l = reg.scores[f].linearity, a = abl.scores[f].linearity;
    pass = pass && l >= 0.6 && l - a >= 0.2;
    detail += std::string(f ? "; " : "") + std::string(to_string(Feature(f))) + " linearity " + fmt(l) +
              " vs ablation " + fmt(a) + " (gap " + fmt(l - a) + ")";
    std::printf("  [eval] %s: regularized C=%s R=%s L=%s | ablation C=%s R=%s L=%s\n",
                std::string(to_string(Feature(f))).c_str(), fmt(reg.scores[f].consistency).c_str(),
                fmt(reg.scores[f].restrictiveness).c_str(), fmt(l).c_str(), fmt(abl.scores[f].consistency).c_str(),
                fmt(abl.scores[f].restrictiveness).c_str(), fmt(a).c_str());
  }
  std::printf("  [info] /fade rhythm sweep Spearman rho %s\n", fmt(fade_spearman(gm_model())).c_str());
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// Semi-supervised clustering.

Outcome clustering() {
  const auto& test = experiment().split.test;
  std::size_t labelled = 0;
  for (const auto& r : experiment().split.train) labelled += r.arousal_class ? 1 : 0;
  const auto gm = cluster_accuracy(gm_model(), test);
  const auto single = cluster_accuracy(single_model(), test);
  return {gm.accuracy >= 0.9 && single.accuracy < gm.accuracy,
          "gm_vae accuracy " + fmt(gm.accuracy) + " vs single-latent " + fmt(single.accuracy) + " on " +
              std::to_string(gm.scored) + " test segments (" + std::to_string(labelled) + " labelled training records)"};
}

// ---------------------------------------------------------------------------
// Transfer direction.

Outcome transfer_direction() {
  const auto& model = gm_model();
  const auto& test = experiment().split.test;
  std::size_t sources = 0, moved = 0, identical = 0, total = 0;
  for (const auto& r : test) {
    const auto recon = transfer(model, r.segment, 1, 0.0);
    const KeyVector key = conditioning_key(r.segment);
    const auto codes = model.encode_means(std::span<const TokenSeq>(&r.tokens, 1));
    const auto plain = model.greedy_decode(codes, std::span<const KeyVector>(&key, 1)).front();
    ++total;
    if (recon.tokens_out == plain && recon.z_after.z == codes.front().z) ++identical;
    if (r.true_class != 0) continue;
    ++sources;
    const auto out = transfer(model, r.segment, 1, 1.0);
    if (out.densities_after.rhythm_density > recon.densities_after.rhythm_density &&
        out.densities_after.note_density < recon.densities_after.note_density) {
      ++moved;
    }
  }
  const double rate = sources ? static_cast<double>(moved) / static_cast<double>(sources) : 0.0;
  return {sources >= 50 && rate >= 0.8 && identical == total,
          std::to_string(moved) + "/" + std::to_string(sources) + " class-0 segments moved in both densities (" +
              fmt(rate * 100, 1) + "%); alpha=0 identical to reconstruction " + std::to_string(identical) + "/" +
              std::to_string(total)};
}

// ---------------------------------------------------------------------------
// Determinism.

Outcome determinism() {
  ModelConfig c = desk(ModelMode::GmVae);
  c.train_steps = 200;
  const auto& data = experiment().split;
  const auto root = fs::temp_directory_path() / "faders_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> curves, reports, manifests, blobs, ids;
  for (int run = 0; run < 2; ++run) {
    const auto result = train(c, data.train, kSeed);
    curves.push_back(loss_curve_csv(result.log));
    const auto dir = root / ("run" + std::to_string(run));
    ids.push_back(save_checkpoint(result.model, dir.string()));
    manifests.push_back(read_file((dir / "manifest.json").string()));
    blobs.push_back(read_file((dir / "tensors.bin").string()));
    const auto loaded = load_checkpoint(dir.string());
    const auto report = evaluate(ModelCodec(loaded.model, loaded.id), data.test, kSweepT, 50, kSeed);
    reports.push_back(report_to_json(report).dump());
  }
  fs::remove_all(root);
  const bool curve_ok = curves[0] == curves[1], report_ok = reports[0] == reports[1];
  const bool ckpt_ok = manifests[0] == manifests[1] && blobs[0] == blobs[1] && ids[0] == ids[1];
  return {curve_ok && report_ok && ckpt_ok,
          std::string("loss curve ") + (curve_ok ? "identical" : "DIFFERS") + ", eval report " +
              (report_ok ? "identical" : "DIFFERS") + ", checkpoint " + (ckpt_ok ? "identical" : "DIFFERS") + " (id " +
              ids[0] + ")"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"gradient_suite", gradient_suite},
      {"oracle_equivalence", oracle_equivalence},
      {"metric_correctness", metric_correctness},
      {"regularization_efficacy", regularization_efficacy},
      {"semi_supervised_clustering", clustering},
      {"transfer_direction", transfer_direction},
      {"determinism", determinism},
  };
  std::vector<std::string> only;
  if (const char* env = std::getenv("FADERS_ACCEPTANCE_ONLY")) {
    std::stringstream ss(env);
    for (std::string item; std::getline(ss, item, ',');) only.push_back(item);
  }
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
