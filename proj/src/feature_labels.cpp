// SPDX-License-Identifier: Apache-2.0
#include "faders/feature_labels.hpp"

#include <algorithm>
#include <cmath>

#include "faders/error.hpp"

namespace faders {

RhythmLabel rhythm_label(const Segment& segment) {
  RhythmLabel label;
  label.steps.fill(RhythmState::Rest);
  for (const auto& n : segment.notes()) {
    for (int s = n.onset_step + 1; s < n.end_step() && s < kStepsPerSegment; ++s) {
      if (label.steps[s] == RhythmState::Rest) label.steps[s] = RhythmState::Hold;
    }
  }
  for (const auto& n : segment.notes()) label.steps[n.onset_step] = RhythmState::Onset;
  return label;
}

NoteLabel note_label(const Segment& segment) {
  NoteLabel label;
  for (const auto& n : segment.notes()) {
    for (int s = n.onset_step; s < n.end_step() && s < kStepsPerSegment; ++s) ++label.steps[s];
  }
  for (auto& c : label.steps) c = std::min(c, kMaxPolyphony);
  return label;
}

double rhythm_density(const RhythmLabel& label) {
  const auto onsets = std::count(label.steps.begin(), label.steps.end(), RhythmState::Onset);
  return static_cast<double>(onsets) / kStepsPerSegment;
}

double note_density(const NoteLabel& label) {
  int total = 0;
  for (int c : label.steps) total += c;
  return static_cast<double>(total) / kStepsPerSegment;
}

Densities densities(const Segment& segment) {
  return {rhythm_density(rhythm_label(segment)), note_density(note_label(segment))};
}

namespace {

double pearson(const std::array<double, 12>& x, const std::array<double, 12>& y) {
  double mx = 0, my = 0;
  for (int i = 0; i < 12; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= 12;
  my /= 12;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 12; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

KeyVector estimate_key(const Segment& segment) {
  if (segment.empty()) throw Error(ErrorCode::EmptySegment, "key estimation needs at least one note");
  std::array<double, 12> histogram{};
  for (const auto& n : segment.notes()) histogram[n.pitch % 12] += n.duration_steps;

  int best = 0;
  double best_r = -2.0;
  for (int k = 0; k < kKeyClasses; ++k) {
    const auto& profile = k < 12 ? kMajorProfile : kMinorProfile;
    const int tonic = k % 12;
    std::array<double, 12> rotated{};
    for (int pc = 0; pc < 12; ++pc) rotated[pc] = profile[(pc - tonic + 12) % 12];
    const double r = pearson(histogram, rotated);
    if (r > best_r) {
      best_r = r;
      best = k;
    }
  }
  return {best};
}

KeyVector conditioning_key(const Segment& segment) {
  return segment.empty() ? KeyVector{0} : estimate_key(segment);
}

}  // namespace faders
