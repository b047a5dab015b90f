// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

#include "faders/token_codec.hpp"

namespace faders {

enum class RhythmState : std::uint8_t { Onset = 0, Hold = 1, Rest = 2 };

inline constexpr int kRhythmClasses = 3;
inline constexpr int kNoteClasses = 16;
inline constexpr int kMaxPolyphony = 15;
inline constexpr int kKeyClasses = 24;

struct RhythmLabel {
  std::array<RhythmState, kStepsPerSegment> steps{};
  bool operator==(const RhythmLabel&) const = default;
};

// Polyphony per step, clamped to kMaxPolyphony.
struct NoteLabel {
  std::array<int, kStepsPerSegment> steps{};
  bool operator==(const NoteLabel&) const = default;
};

// 0-11: major keys C..B, 12-23: minor keys C..B.
struct KeyVector {
  int index = 0;

  bool is_minor() const { return index >= 12; }
  int tonic() const { return index % 12; }
  std::array<float, kKeyClasses> one_hot() const {
    std::array<float, kKeyClasses> v{};
    v[static_cast<std::size_t>(index)] = 1.0F;
    return v;
  }
  bool operator==(const KeyVector&) const = default;
};

struct Densities {
  double rhythm_density = 0.0;  // [0, 1]
  double note_density = 0.0;    // [0, 15]
  bool operator==(const Densities&) const = default;
};

RhythmLabel rhythm_label(const Segment& segment);
NoteLabel note_label(const Segment& segment);
double rhythm_density(const RhythmLabel& label);
double note_density(const NoteLabel& label);
Densities densities(const Segment& segment);

// Krumhansl-Schmuckler key finding with duration-weighted pitch classes.
// Throws EmptySegment when there is nothing to analyse.
KeyVector estimate_key(const Segment& segment);

// Key used for model conditioning: estimate_key, or C major for silence.
KeyVector conditioning_key(const Segment& segment);

// Krumhansl-Kessler probe-tone profiles, tonic first.
inline constexpr std::array<double, 12> kMajorProfile = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                                         2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
inline constexpr std::array<double, 12> kMinorProfile = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                                         2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

}  // namespace faders
