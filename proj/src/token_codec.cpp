// SPDX-License-Identifier: Apache-2.0
#include "faders/token_codec.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "faders/error.hpp"

namespace faders {

Segment Segment::from_notes(std::vector<NoteEvent> notes) {
  for (auto& n : notes) {
    if (n.pitch < 0 || n.pitch > 127) {
      throw Error(ErrorCode::InvalidPitch, "pitch " + std::to_string(n.pitch) + " outside [0,127]");
    }
    n.onset_step = std::clamp(n.onset_step, 0, kStepsPerSegment - 1);
    n.duration_steps = std::clamp(n.duration_steps, 1, kStepsPerSegment - n.onset_step);
  }
  // Order by pitch then onset, longest first, so collisions and same-pitch
  // overlaps can be resolved in a single pass.
  std::sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
    if (a.pitch != b.pitch) return a.pitch < b.pitch;
    if (a.onset_step != b.onset_step) return a.onset_step < b.onset_step;
    return a.duration_steps > b.duration_steps;
  });
  std::vector<NoteEvent> kept;
  kept.reserve(notes.size());
  for (const auto& n : notes) {
    if (!kept.empty() && kept.back().pitch == n.pitch) {
      auto& prev = kept.back();
      if (prev.onset_step == n.onset_step) continue;
      if (prev.end_step() > n.onset_step) prev.duration_steps = n.onset_step - prev.onset_step;
    }
    kept.push_back(n);
  }
  std::sort(kept.begin(), kept.end(), [](const NoteEvent& a, const NoteEvent& b) {
    if (a.onset_step != b.onset_step) return a.onset_step < b.onset_step;
    return a.pitch < b.pitch;
  });
  Segment s;
  s.notes_ = std::move(kept);
  return s;
}

int Token::id() const {
  switch (kind) {
    case TokenKind::NoteOn: return kNoteOnBase + value;
    case TokenKind::NoteOff: return kNoteOffBase + value;
    case TokenKind::TimeShift: return kTimeShiftBase + value - 1;
  }
  return kPadId;
}

Token Token::from_id(int id) {
  if (id >= kNoteOnBase && id < kNoteOffBase) return note_on(id - kNoteOnBase);
  if (id >= kNoteOffBase && id < kTimeShiftBase) return note_off(id - kNoteOffBase);
  if (id >= kTimeShiftBase && id < kVocabSize) return time_shift(id - kTimeShiftBase + 1);
  throw Error(ErrorCode::IndexError, "token id " + std::to_string(id) + " is not an event token");
}

Segment quantize_notes(std::span<const RawNote> raw, int beats_per_segment, int resolution) {
  const int steps = std::min(beats_per_segment * resolution, kStepsPerSegment);
  std::vector<NoteEvent> notes;
  notes.reserve(raw.size());
  for (const auto& r : raw) {
    if (r.pitch < 0 || r.pitch > 127) {
      throw Error(ErrorCode::InvalidPitch, "pitch " + std::to_string(r.pitch) + " outside [0,127]");
    }
    const int onset = std::clamp(static_cast<int>(std::lround(r.onset_beats * resolution)), 0, steps - 1);
    int duration = std::max(1, static_cast<int>(std::lround(r.duration_beats * resolution)));
    duration = std::min(duration, steps - onset);
    notes.push_back({r.pitch, onset, duration});
  }
  return Segment::from_notes(std::move(notes));
}

TokenSeq encode_tokens(const Segment& segment) {
  const auto& notes = segment.notes();
  // Note-offs keyed by end step, note-ons by onset step; both kept ascending by pitch.
  std::map<int, std::vector<int>> offs;
  std::map<int, std::vector<int>> ons;
  for (const auto& n : notes) {
    ons[n.onset_step].push_back(n.pitch);
    offs[n.end_step()].push_back(n.pitch);
  }
  for (auto& [_, v] : offs) std::sort(v.begin(), v.end());
  for (auto& [_, v] : ons) std::sort(v.begin(), v.end());

  std::vector<int> event_steps;
  for (const auto& [s, _] : ons) event_steps.push_back(s);
  for (const auto& [s, _] : offs) event_steps.push_back(s);
  event_steps.push_back(0);
  event_steps.push_back(kStepsPerSegment);
  std::sort(event_steps.begin(), event_steps.end());
  event_steps.erase(std::unique(event_steps.begin(), event_steps.end()), event_steps.end());

  TokenSeq out;
  for (std::size_t i = 0; i < event_steps.size(); ++i) {
    const int step = event_steps[i];
    if (auto it = offs.find(step); it != offs.end()) {
      for (int p : it->second) out.push_back(Token::note_off(p));
    }
    if (auto it = ons.find(step); it != ons.end()) {
      for (int p : it->second) out.push_back(Token::note_on(p));
    }
    if (i + 1 < event_steps.size()) out.push_back(Token::time_shift(event_steps[i + 1] - step));
  }
  if (out.size() > kMaxTokens) {
    throw Error(ErrorCode::TokenOverflow,
                std::to_string(out.size()) + " tokens exceed the limit of " + std::to_string(kMaxTokens));
  }
  return out;
}

Segment decode_tokens(std::span<const Token> tokens) {
  int step = 0;
  std::map<int, int> pending;  // pitch -> onset step
  std::vector<NoteEvent> notes;
  auto close = [&](int pitch, int onset) {
    if (step > onset) notes.push_back({pitch, onset, step - onset});
  };
  for (const auto& t : tokens) {
    switch (t.kind) {
      case TokenKind::NoteOn: {
        if (t.value < 0 || t.value > 127) break;
        if (auto it = pending.find(t.value); it != pending.end()) close(it->first, it->second);
        pending[t.value] = step;
        break;
      }
      case TokenKind::NoteOff: {
        auto it = pending.find(t.value);
        if (it == pending.end()) break;
        close(it->first, it->second);
        pending.erase(it);
        break;
      }
      case TokenKind::TimeShift:
        if (t.value > 0) step = std::min(kStepsPerSegment, step + t.value);
        break;
    }
  }
  step = kStepsPerSegment;
  for (const auto& [pitch, onset] : pending) close(pitch, onset);
  return Segment::from_notes(std::move(notes));
}

std::vector<Segment> segment_stream(std::span<const RawNote> notes, double total_beats) {
  const double window = kBeatsPerSegment;
  std::size_t count = total_beats > 0 ? static_cast<std::size_t>(std::ceil(total_beats / window)) : 0;
  for (const auto& n : notes) {
    count = std::max(count, static_cast<std::size_t>(std::floor(std::max(0.0, n.onset_beats) / window)) + 1);
  }
  std::vector<std::vector<RawNote>> buckets(count);
  for (const auto& n : notes) {
    const double onset = std::max(0.0, n.onset_beats);
    const auto w = static_cast<std::size_t>(std::floor(onset / window));
    const double local = onset - static_cast<double>(w) * window;
    buckets[w].push_back({n.pitch, local, std::min(n.duration_beats, window - local)});
  }
  std::vector<Segment> out;
  out.reserve(count);
  for (const auto& b : buckets) out.push_back(quantize_notes(b));
  return out;
}

std::vector<int> token_ids(std::span<const Token> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(t.id());
  return ids;
}

TokenSeq tokens_from_ids(std::span<const int> ids) {
  TokenSeq out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id >= kNoteOnBase && id < kVocabSize) out.push_back(Token::from_id(id));
  }
  return out;
}

std::string to_string(const Token& token) {
  switch (token.kind) {
    case TokenKind::NoteOn: return "NOTE_ON(" + std::to_string(token.value) + ")";
    case TokenKind::NoteOff: return "NOTE_OFF(" + std::to_string(token.value) + ")";
    case TokenKind::TimeShift: return "TIME_SHIFT(" + std::to_string(token.value) + ")";
  }
  return "?";
}

}  // namespace faders
