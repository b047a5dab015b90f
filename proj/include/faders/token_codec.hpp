// SPDX-License-Identifier: Apache-2.0
//
// Quantized 4-beat segments and their event-token serialization.
//
// Token id layout (frozen; used for tensors and checkpoints):
//   PAD = 0, START = 1
//   NOTE_ON(p)     = 2 + p       p in [0, 127]
//   NOTE_OFF(p)    = 130 + p     p in [0, 127]
//   TIME_SHIFT(n)  = 258 + n - 1 n in [1, 16]
#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace faders {

inline constexpr int kStepsPerSegment = 16;
inline constexpr int kBeatsPerSegment = 4;
inline constexpr int kStepsPerBeat = 4;
inline constexpr std::size_t kMaxTokens = 100;
inline constexpr int kVocabSize = 274;

inline constexpr int kPadId = 0;
inline constexpr int kStartId = 1;
inline constexpr int kNoteOnBase = 2;
inline constexpr int kNoteOffBase = 130;
inline constexpr int kTimeShiftBase = 258;

struct NoteEvent {
  int pitch = 0;
  int onset_step = 0;
  int duration_steps = 1;

  int end_step() const { return onset_step + duration_steps; }
  auto operator<=>(const NoteEvent&) const = default;
};

// Notes sorted by (onset_step, pitch), no duplicate (pitch, onset) pairs and
// no overlapping notes of the same pitch. Construct through `from_notes`,
// which establishes these invariants.
class Segment {
 public:
  Segment() = default;

  // Validates ranges (InvalidPitch on bad pitch), clips notes at the segment
  // end, keeps the longest note on (pitch, onset) collisions, and truncates
  // an earlier same-pitch note where a later one starts.
  static Segment from_notes(std::vector<NoteEvent> notes);

  const std::vector<NoteEvent>& notes() const { return notes_; }
  bool empty() const { return notes_.empty(); }
  std::size_t size() const { return notes_.size(); }

  bool operator==(const Segment&) const = default;

 private:
  std::vector<NoteEvent> notes_;
};

enum class TokenKind : std::uint8_t { NoteOn, NoteOff, TimeShift };

struct Token {
  TokenKind kind = TokenKind::TimeShift;
  int value = 1;  // pitch for NoteOn/NoteOff, steps for TimeShift

  static Token note_on(int pitch) { return {TokenKind::NoteOn, pitch}; }
  static Token note_off(int pitch) { return {TokenKind::NoteOff, pitch}; }
  static Token time_shift(int steps) { return {TokenKind::TimeShift, steps}; }

  int id() const;
  // Ids outside the NOTE_ON/NOTE_OFF/TIME_SHIFT ranges (PAD, START, >= 274)
  // are rejected with IndexError.
  static Token from_id(int id);

  bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

struct RawNote {
  int pitch = 0;
  double onset_beats = 0.0;
  double duration_beats = 0.0;
};

Segment quantize_notes(std::span<const RawNote> raw, int beats_per_segment = kBeatsPerSegment,
                       int resolution = kStepsPerBeat);

// Throws TokenOverflow when the serialization is longer than kMaxTokens.
TokenSeq encode_tokens(const Segment& segment);

// Total: never throws. Malformed input yields a best-effort segment.
Segment decode_tokens(std::span<const Token> tokens);

std::vector<Segment> segment_stream(std::span<const RawNote> notes, double total_beats);

std::vector<int> token_ids(std::span<const Token> tokens);
// Skips PAD/START and ignores ids outside the vocabulary.
TokenSeq tokens_from_ids(std::span<const int> ids);

std::string to_string(const Token& token);

}  // namespace faders
