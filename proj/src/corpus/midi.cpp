// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <deque>
#include <fstream>
#include <map>

#include "faders/corpus/corpus.hpp"
#include "faders/error.hpp"

namespace faders {

namespace {

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
  std::size_t end = 0;

  void need(std::size_t n) const {
    if (pos + n > end) throw Error(ErrorCode::MalformedMidi, "truncated at byte " + std::to_string(pos));
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | bytes[pos++];
    return v;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if ((b & 0x80) == 0) return v;
    }
    throw Error(ErrorCode::MalformedMidi, "variable-length quantity longer than 4 bytes");
  }
  bool tag(const char* four) {
    need(4);
    return std::equal(four, four + 4, bytes.begin() + static_cast<std::ptrdiff_t>(pos));
  }
};

struct NoteMessage {
  std::uint64_t tick = 0;
  std::size_t track = 0;
  std::size_t order = 0;
  int channel = 0;
  int pitch = 0;
  bool on = false;
};

}  // namespace

MidiNotes midi_to_notes(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes, 0, bytes.size()};
  if (bytes.size() < 14 || !r.tag("MThd")) throw Error(ErrorCode::MalformedMidi, "missing MThd header");
  r.pos += 4;
  const std::uint32_t header_len = r.be(4);
  if (header_len < 6) throw Error(ErrorCode::MalformedMidi, "header chunk too short");
  const std::size_t header_end = r.pos + header_len;
  const auto format = r.be(2);
  const auto ntracks = r.be(2);
  const auto division = r.be(2);
  if (format > 1) throw Error(ErrorCode::MalformedMidi, "SMF format " + std::to_string(format) + " unsupported");
  if ((division & 0x8000U) != 0) throw Error(ErrorCode::MalformedMidi, "SMPTE division unsupported");
  if (division == 0) throw Error(ErrorCode::MalformedMidi, "zero ticks per quarter");
  r.pos = header_end;

  std::vector<NoteMessage> messages;
  std::uint64_t last_tick = 0;
  std::size_t track = 0;
  while (track < ntracks && r.pos + 8 <= bytes.size()) {
    const bool is_track = r.tag("MTrk");
    r.pos += 4;
    const std::uint32_t len = r.be(4);
    if (r.pos + len > bytes.size()) throw Error(ErrorCode::MalformedMidi, "chunk overruns file");
    const std::size_t chunk_end = r.pos + len;
    if (!is_track) {
      r.pos = chunk_end;
      continue;
    }
    Reader t{bytes, r.pos, chunk_end};
    std::uint64_t tick = 0;
    std::uint8_t status = 0;
    while (t.pos < chunk_end) {
      tick += t.vlq();
      std::uint8_t b = t.u8();
      if (b == 0xFF) {
        const std::uint8_t type = t.u8();
        const std::uint32_t n = t.vlq();
        t.need(n);
        t.pos += n;
        if (type == 0x2F) break;
        continue;
      }
      if (b == 0xF0 || b == 0xF7) {
        const std::uint32_t n = t.vlq();
        t.need(n);
        t.pos += n;
        continue;
      }
      std::uint8_t data1 = 0;
      if ((b & 0x80) != 0) {
        status = b;
        data1 = t.u8();
      } else {
        if (status == 0) throw Error(ErrorCode::MalformedMidi, "running status without a status byte");
        data1 = b;
      }
      const int kind = status & 0xF0;
      const int channel = status & 0x0F;
      if (kind == 0xC0 || kind == 0xD0) continue;
      const std::uint8_t data2 = t.u8();
      if (kind == 0x90 || kind == 0x80) {
        messages.push_back({tick, track, messages.size(), channel, data1 & 0x7F, kind == 0x90 && data2 > 0});
      }
    }
    last_tick = std::max(last_tick, tick);
    r.pos = chunk_end;
    ++track;
  }
  if (track < ntracks) throw Error(ErrorCode::MalformedMidi, "expected " + std::to_string(ntracks) + " tracks");

  std::stable_sort(messages.begin(), messages.end(), [](const NoteMessage& a, const NoteMessage& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.track < b.track;
  });
  const double tpq = division;
  MidiNotes out;
  std::map<std::pair<int, int>, std::deque<std::uint64_t>> pending;
  for (const auto& m : messages) {
    auto& q = pending[{m.channel, m.pitch}];
    if (m.on) {
      q.push_back(m.tick);
    } else if (!q.empty()) {
      const std::uint64_t start = q.front();
      q.pop_front();
      if (m.tick > start) {
        out.notes.push_back({m.pitch, start / tpq, static_cast<double>(m.tick - start) / tpq});
      }
    }
  }
  for (auto& [key, q] : pending) {
    for (std::uint64_t start : q) {
      ++out.unpaired_note_ons;
      if (last_tick > start) {
        out.notes.push_back({key.second, start / tpq, static_cast<double>(last_tick - start) / tpq});
      }
    }
  }
  std::sort(out.notes.begin(), out.notes.end(), [](const RawNote& a, const RawNote& b) {
    return a.onset_beats != b.onset_beats ? a.onset_beats < b.onset_beats : a.pitch < b.pitch;
  });
  out.total_beats = static_cast<double>(last_tick) / tpq;
  return out;
}

IngestResult ingest_midi(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const MidiNotes midi = midi_to_notes(bytes);
  IngestResult result;
  result.unpaired_notes = midi.unpaired_note_ons;
  for (auto& seg : segment_stream(midi.notes, midi.total_beats)) {
    try {
      result.records.push_back(make_record(std::move(seg)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TokenOverflow) throw;
      ++result.skipped_overflow;
    }
  }
  return result;
}

}  // namespace faders
