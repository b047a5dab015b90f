// SPDX-License-Identifier: Apache-2.0
//
// faders: corpus preparation, training, evaluation, transfer and serving.
// Exit codes: 0 success, 1 usage error, 2 data error.
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "faders/corpus/corpus.hpp"
#include "faders/error.hpp"
#include "faders/eval/harness.hpp"
#include "faders/model/checkpoint.hpp"
#include "faders/model/train.hpp"
#include "faders/service/io.hpp"
#include "faders/service/service.hpp"
#include "faders/transfer.hpp"

namespace {

using namespace faders;
using nlohmann::json;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<CorpusRecord> load_corpus(const std::string& path, bool verbose = true) {
  const bool midi = ends_with(path, ".mid") || ends_with(path, ".midi");
  IngestResult res = midi ? ingest_midi(path) : ingest_jsonl(path);
  if (verbose && (res.skipped_overflow > 0 || res.unpaired_notes > 0)) {
    std::cerr << path << ": skipped " << res.skipped_overflow << " overflowing segments, closed "
              << res.unpaired_notes << " unpaired notes\n";
  }
  return std::move(res.records);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

ModelConfig resolve_config(const std::string& path, const std::string& mode, std::optional<std::uint64_t> steps) {
  ModelConfig c = path.empty() ? ModelConfig::desk() : load_config(path);
  if (!mode.empty()) c.mode = parse_mode(mode);
  if (steps) c.train_steps = *steps;
  c.validate();
  return c;
}

std::vector<std::string> record_labels(const std::vector<CorpusRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) {
    const auto c = r.true_class ? r.true_class : r.arousal_class;
    out.push_back(c ? (*c == 1 ? "high" : "low") : "unlabelled");
  }
  return out;
}

Service* g_service = nullptr;
extern "C" void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"faders: fader-controlled symbolic music latent models"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out;
  std::string corpus_path;
  std::string checkpoint;
  std::string config_path;
  std::string mode;
  double labelled_fraction = 0.01;
  std::optional<double> label_subsample;
  std::size_t n = 2000;
  std::size_t T = 8;
  std::size_t M = 100;
  std::size_t runs = 1;
  std::optional<std::uint64_t> split_seed;
  std::optional<std::uint64_t> steps;
  std::string feature = "rhythm";
  std::string csv_out;
  std::string loss_csv;
  int target = 1;
  double alpha = 1.0;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors = ServiceOptions{}.cors_origin;
  std::string split_part = "test";
  std::string input;

  auto* corpus = app.add_subcommand("corpus", "Generate or ingest a corpus");
  corpus->require_subcommand(1);
  auto* synth = corpus->add_subcommand("synth", "Synthetic corpus with arousal-dependent densities");
  synth->add_option("--n", n, "Number of segments")->check(CLI::Range(std::size_t{1}, std::size_t{10000000}));
  synth->add_option("--seed", seed);
  synth->add_option("--labelled-fraction", labelled_fraction)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--out", out, "JSONL output (stdout when omitted)");
  auto* ingest = corpus->add_subcommand("ingest", "JSONL or Standard MIDI File to normalized JSONL");
  ingest->add_option("--input", input, "Input .jsonl, .mid or .midi")->required();
  ingest->add_option("--out", out);

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--corpus", corpus_path)->required();
  train_cmd->add_option("--config", config_path, "JSON config (desk preset when omitted)");
  train_cmd->add_option("--mode", mode)->check(CLI::IsMember({"vanilla_vae", "gm_vae", "ablation_single_latent"}));
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--split-seed", split_seed, "Split seed (defaults to --seed)");
  train_cmd->add_option("--steps", steps, "Override train_steps");
  train_cmd->add_option("--labelled-fraction", label_subsample, "Keep this fraction of the corpus labels")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--checkpoint,--out", checkpoint, "Checkpoint directory")->required();
  train_cmd->add_option("--loss-csv", loss_csv, "Loss curve CSV (default <checkpoint>/loss_curve.csv)");

  auto* eval_cmd = app.add_subcommand("eval", "Controllability report on the test split");
  auto* sweep_cmd = app.add_subcommand("sweep", "Raw fader sweep matrices as CSV");
  for (auto* sub : {eval_cmd, sweep_cmd}) {
    sub->add_option("--checkpoint", checkpoint)->required();
    sub->add_option("--corpus", corpus_path)->required();
    sub->add_option("--seed", seed);
    sub->add_option("--split-seed", split_seed, "Split seed (defaults to --seed)");
    sub->add_option("--T", T)->check(CLI::PositiveNumber);
    sub->add_option("--M", M)->check(CLI::PositiveNumber);
    sub->add_option("--out", out);
  }
  eval_cmd->add_option("--runs", runs, "Repeat with seeds seed..seed+runs-1 and report mean and std")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--csv", csv_out, "Also write a CSV report");
  sweep_cmd->add_option("--feature", feature)->check(CLI::IsMember({"rhythm", "note"}));

  auto* transfer_cmd = app.add_subcommand("transfer", "Arousal transfer for every record of a corpus");
  transfer_cmd->add_option("--checkpoint", checkpoint)->required();
  transfer_cmd->add_option("--corpus,--input", corpus_path)->required();
  transfer_cmd->add_option("--target", target)->check(CLI::Range(0, 1));
  transfer_cmd->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.5));
  transfer_cmd->add_option("--out", out, "JSONL output (stdout when omitted)");

  auto* project_cmd = app.add_subcommand("project", "2-D PCA projection of latent means as CSV");
  project_cmd->add_option("--checkpoint", checkpoint)->required();
  project_cmd->add_option("--corpus", corpus_path)->required();
  project_cmd->add_option("--feature", feature, "rhythm, note, or latent (single-latent models)")
      ->check(CLI::IsMember({"rhythm", "note", "latent"}));
  project_cmd->add_option("--out", out);

  auto* serve_cmd = app.add_subcommand("serve", "HTTP JSON service");
  serve_cmd->add_option("--checkpoint", checkpoint, "Checkpoint to load (409 on model requests without one)");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--cors-origin", cors);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (synth->parsed()) {
      emit(out, to_jsonl(synth_corpus(n, labelled_fraction, seed)));
    } else if (ingest->parsed()) {
      emit(out, to_jsonl(load_corpus(input)));
    } else if (train_cmd->parsed()) {
      const ModelConfig config = resolve_config(config_path, mode, steps);
      auto records = load_corpus(corpus_path);
      if (label_subsample) subsample_labels(records, *label_subsample, seed);
      const CorpusSplit parts = split(std::move(records), split_seed.value_or(seed));
      const std::uint64_t report_every = std::max<std::uint64_t>(1, config.train_steps / 20);
      auto result = train(config, parts.train, seed, [&](const StepLog& s) {
        if (s.step % report_every == 0 || s.step + 1 == config.train_steps) {
          std::cerr << "step " << s.step << " total " << s.loss.total << " recon " << s.loss.reconstruction
                    << " beta " << s.loss.beta << "\n";
        }
      });
      const std::string id = save_checkpoint(result.model, checkpoint);
      write_file_atomic(loss_csv.empty() ? checkpoint + "/loss_curve.csv" : loss_csv, loss_curve_csv(result.log));
      std::cout << json{{"checkpoint", checkpoint}, {"checkpoint_id", id}, {"train_records", parts.train.size()}}.dump()
                << "\n";
    } else if (eval_cmd->parsed() || sweep_cmd->parsed()) {
      const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
      const CorpusSplit parts = split(load_corpus(corpus_path), split_seed.value_or(seed));
      const ModelCodec codec(ckpt.model, ckpt.id);
      if (sweep_cmd->parsed()) {
        const auto res = fader_sweep(codec, parts.test, parse_feature(feature), T, M, seed);
        std::string csv = csv_row({"m", "sample", "t", "z_d", "rhythm_density", "note_density"});
        for (std::size_t m = 0; m < res.samples.size(); ++m) {
          for (std::size_t t = 0; t < res.values.size(); ++t) {
            csv += csv_row({std::to_string(m), std::to_string(res.samples[m]), std::to_string(t + 1),
                            format_double(res.values[t]), format_double(res.rhythm[m][t]),
                            format_double(res.note[m][t])});
          }
        }
        emit(out, csv);
      } else {
        std::vector<std::pair<std::string, EvalReport>> reports;
        json run_json = json::array();
        for (std::size_t r = 0; r < runs; ++r) {
          const auto report = evaluate(codec, parts.test, T, M, seed + r);
          run_json.push_back(report_to_json(report));
          reports.emplace_back("run" + std::to_string(r), report);
        }
        json doc = runs == 1 ? run_json.front() : json{{"runs", run_json}};
        if (runs > 1) {
          json summary = json::object();
          for (std::size_t f = 0; f < kFeatureCount; ++f) {
            for (const char* metric : {"consistency", "restrictiveness", "linearity"}) {
              std::vector<double> v;
              for (const auto& rj : run_json) v.push_back(rj["features"][std::string(to_string(Feature(f)))][metric]);
              double mean = 0.0;
              for (double x : v) mean += x;
              mean /= static_cast<double>(v.size());
              summary[std::string(to_string(Feature(f)))][metric] = {{"mean", mean}, {"std", population_std(v)}};
            }
          }
          doc["summary"] = summary;
        }
        emit(out, doc.dump(2) + "\n");
        if (!csv_out.empty()) write_file_atomic(csv_out, reports_csv(reports));
      }
    } else if (transfer_cmd->parsed()) {
      const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
      std::string lines;
      for (const auto& rec : load_corpus(corpus_path)) {
        json j = transfer_to_json(transfer(ckpt.model, rec.segment, target, alpha));
        j["checkpoint_id"] = ckpt.id;
        lines += j.dump() + "\n";
      }
      emit(out, lines);
    } else if (project_cmd->parsed()) {
      const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
      const auto records = load_corpus(corpus_path);
      std::size_t latent = 0;
      if (feature == "latent") {
        if (ckpt.model.latent_count() != 1) throw UsageError("--feature latent needs a single-latent checkpoint");
      } else {
        if (ckpt.model.latent_count() != kFeatureCount) throw UsageError("single-latent checkpoint: use --feature latent");
        latent = static_cast<std::size_t>(parse_feature(feature));
      }
      std::vector<TokenSeq> seqs;
      for (const auto& r : records) seqs.push_back(r.tokens);
      std::vector<std::vector<double>> z;
      for (const auto& code : ckpt.model.encode_means(seqs)) z.push_back(code.z[latent]);
      std::string csv = csv_row({"x", "y", "label"});
      for (const auto& p : project_latents(z, record_labels(records))) {
        csv += csv_row({format_double(p.x), format_double(p.y), p.label});
      }
      emit(out, csv);
    } else if (serve_cmd->parsed()) {
      Service service(ServiceOptions{cors});
      if (!checkpoint.empty()) service.load(checkpoint);
      const int bound = service.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << host << ":" << bound << "\n";
      service.serve_bound();
      g_service = nullptr;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << e.name() << ": " << e.detail() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return 0;
}
