// SPDX-License-Identifier: Apache-2.0
#include "faders/model/train.hpp"

#include <algorithm>
#include <limits>

#include "faders/diff/optim.hpp"
#include "faders/diff/rng.hpp"
#include "faders/error.hpp"
#include "faders/service/io.hpp"

namespace faders {

TrainResult train(const ModelConfig& config, std::span<const CorpusRecord> train_set, std::uint64_t seed,
                  const StepCallback& on_step) {
  config.validate();
  if (train_set.size() < 2) throw Error(ErrorCode::EmptyCorpus, std::to_string(train_set.size()) + " training records");
  const diff::SeedSequence seeds(seed);
  TrainResult result{FaderNet<float>(config, seed), {}};
  auto& model = result.model;
  auto params = model.parameter_list();
  diff::AdamState<float> adam;
  adam.learning_rate = config.learning_rate;

  auto batch_gen = seeds.stream("train.batches");
  auto noise_gen = seeds.stream("train.noise");
  const std::size_t B = std::min(config.batch_size, train_set.size());
  std::vector<std::size_t> order(train_set.size());
  std::vector<std::size_t> labelled;
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
    if (train_set[i].arousal_class) labelled.push_back(i);
  }
  // Reserved slots keep the supervised branch active in every batch when labels are scarce.
  const std::size_t L = std::min({config.labelled_per_batch, labelled.size(), B / 2});
  const std::size_t U = B - L;
  std::size_t cursor = order.size();  // forces a shuffle on the first step
  std::size_t labelled_cursor = labelled.size();

  result.log.reserve(config.train_steps);
  std::vector<const CorpusRecord*> members(B);
  for (std::uint64_t step = 0; step < config.train_steps; ++step) {
    if (cursor + U > order.size()) {
      diff::shuffle(order.begin(), order.end(), batch_gen);
      cursor = 0;
    }
    for (std::size_t b = 0; b < U; ++b) members[b] = &train_set[order[cursor + b]];
    cursor += U;
    for (std::size_t b = 0; b < L; ++b) {
      if (labelled_cursor == labelled.size()) {
        diff::shuffle(labelled.begin(), labelled.end(), batch_gen);
        labelled_cursor = 0;
      }
      members[U + b] = &train_set[labelled[labelled_cursor++]];
    }
    const Batch batch = Batch::from_records(std::span<const CorpusRecord* const>(members));

    std::vector<Tensor<float>> noise;
    for (std::size_t i = 0; i < model.latent_count(); ++i) {
      Tensor<float> n = Tensor<float>::matrix(B, config.z_dim);
      for (auto& v : n.data) v = static_cast<float>(diff::standard_normal(noise_gen));
      noise.push_back(std::move(n));
    }

    model.params().zero_grad();
    Tape<float> tape;
    const auto fwd = model.forward(tape, batch, noise, config.beta.at(step));
    tape.backward(fwd.total);
    StepLog entry{step, fwd.breakdown, 0.0};
    entry.grad_norm = config.grad_clip > 0 ? diff::clip_grad_norm<float>(params, config.grad_clip)
                                           : diff::clip_grad_norm<float>(params, std::numeric_limits<double>::infinity());
    diff::adam_step<float>(params, adam);
    if (on_step) on_step(entry);
    result.log.push_back(entry);
  }
  model.params().zero_grad();
  model.set_z_ranges(latent_ranges(model, train_set));
  return result;
}

std::vector<ZRange> latent_ranges(const FaderNet<float>& model, std::span<const CorpusRecord> records) {
  std::vector<TokenSeq> seqs;
  seqs.reserve(records.size());
  for (const auto& r : records) seqs.push_back(r.tokens);
  const auto codes = model.encode_means(seqs);
  const std::size_t d = model.config().regularized_dim;
  std::vector<ZRange> ranges(model.latent_count(),
                             {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (const auto& c : codes) {
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      ranges[i].min = std::min(ranges[i].min, c.z[i][d]);
      ranges[i].max = std::max(ranges[i].max, c.z[i][d]);
    }
  }
  if (codes.empty()) std::fill(ranges.begin(), ranges.end(), ZRange{});
  return ranges;
}

std::string loss_curve_csv(const std::vector<StepLog>& log) {
  std::string out = csv_row({"step", "total", "reconstruction", "kl_rhythm", "kl_note", "reg_rhythm", "reg_note",
                             "disc_rhythm", "disc_note", "beta", "grad_norm"});
  for (const auto& e : log) {
    const auto& l = e.loss;
    out += csv_row({std::to_string(e.step), format_double(l.total), format_double(l.reconstruction),
                    format_double(l.kl_rhythm), format_double(l.kl_note), format_double(l.reg_rhythm),
                    format_double(l.reg_note), format_double(l.disc_rhythm), format_double(l.disc_note),
                    format_double(l.beta), format_double(e.grad_norm)});
  }
  return out;
}

}  // namespace faders
