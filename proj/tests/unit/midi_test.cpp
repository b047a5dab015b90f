// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "../common/expect.hpp"
#include "doctest.h"
#include "faders/corpus/corpus.hpp"

using namespace faders;

namespace {

using Bytes = std::vector<std::uint8_t>;

void put_be(Bytes& out, std::uint32_t v, int n) {
  for (int i = n - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_vlq(Bytes& out, std::uint32_t v) {
  Bytes tmp{static_cast<std::uint8_t>(v & 0x7F)};
  while ((v >>= 7) != 0) tmp.insert(tmp.begin(), static_cast<std::uint8_t>(0x80 | (v & 0x7F)));
  out.insert(out.end(), tmp.begin(), tmp.end());
}

Bytes header(int format, int ntracks, int division) {
  Bytes b = {'M', 'T', 'h', 'd'};
  put_be(b, 6, 4);
  put_be(b, static_cast<std::uint32_t>(format), 2);
  put_be(b, static_cast<std::uint32_t>(ntracks), 2);
  put_be(b, static_cast<std::uint32_t>(division), 2);
  return b;
}

// Events are (delta, raw bytes); an end-of-track meta event is appended.
Bytes track(const std::vector<std::pair<std::uint32_t, Bytes>>& events) {
  Bytes body;
  for (const auto& [delta, raw] : events) {
    put_vlq(body, delta);
    body.insert(body.end(), raw.begin(), raw.end());
  }
  put_vlq(body, 0);
  body.insert(body.end(), {0xFF, 0x2F, 0x00});
  Bytes b = {'M', 'T', 'r', 'k'};
  put_be(b, static_cast<std::uint32_t>(body.size()), 4);
  b.insert(b.end(), body.begin(), body.end());
  return b;
}

Bytes cat(std::initializer_list<Bytes> parts) {
  Bytes out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("single-note SMF") {
    // 480 ticks per quarter; C4 held for two beats.
    const Bytes file = cat({header(0, 1, 480), track({{0, {0x90, 60, 100}}, {960, {0x80, 60, 0}}})});
    const auto m = midi_to_notes(file);
    REQUIRE(m.notes.size() == 1);
    CHECK(m.notes[0].pitch == 60);
    CHECK(m.notes[0].onset_beats == 0.0);
    CHECK(m.notes[0].duration_beats == 2.0);
    CHECK(m.total_beats == 2.0);
    CHECK(m.unpaired_note_ons == 0);
  }

  TEST_CASE("non-SMF input is MalformedMidi") {
    CHECK_FADERS_ERROR(midi_to_notes(Bytes{'R', 'I', 'F', 'F', 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), ErrorCode::MalformedMidi);
    CHECK_FADERS_ERROR(midi_to_notes(Bytes{}), ErrorCode::MalformedMidi);
    CHECK_FADERS_ERROR(midi_to_notes(cat({header(2, 1, 480), track({})})), ErrorCode::MalformedMidi);
    CHECK_FADERS_ERROR(midi_to_notes(cat({header(0, 1, 0xE728), track({})})), ErrorCode::MalformedMidi);
    Bytes truncated = cat({header(0, 1, 480), track({{0, {0x90, 60, 100}}})});
    truncated.resize(truncated.size() - 6);
    CHECK_FADERS_ERROR(midi_to_notes(truncated), ErrorCode::MalformedMidi);
  }

  TEST_CASE("two-track format 1 merge") {
    // Track 1: E4 at beat 0 for 1 beat, G4 at beat 2 for 1 beat (running status, zero-velocity off).
    // Track 2: C3 at beat 1 for 2 beats on channel 2, with a tempo meta event and a program change.
    const Bytes t1 = track({{0, {0x90, 64, 90}}, {240, {64, 0}}, {240, {67, 80}}, {240, {67, 0}}});
    const Bytes t2 = track({{0, {0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20}},
                            {0, {0xC2, 5}},
                            {240, {0x92, 48, 70}},
                            {480, {0x82, 48, 0}}});
    const auto m = midi_to_notes(cat({header(1, 2, 240), t1, t2}));
    REQUIRE(m.notes.size() == 3);
    // hand-merged oracle
    CHECK(m.notes[0].pitch == 64);
    CHECK(m.notes[0].onset_beats == 0.0);
    CHECK(m.notes[0].duration_beats == 1.0);
    CHECK(m.notes[1].pitch == 48);
    CHECK(m.notes[1].onset_beats == 1.0);
    CHECK(m.notes[1].duration_beats == 2.0);
    CHECK(m.notes[2].pitch == 67);
    CHECK(m.notes[2].onset_beats == 2.0);
    CHECK(m.notes[2].duration_beats == 1.0);
    CHECK(m.total_beats == 3.0);
  }

  TEST_CASE("unpaired note-on closes at file end") {
    const Bytes file = cat({header(0, 1, 96), track({{0, {0x90, 60, 100}}, {96, {0x90, 62, 100}}, {96, {0x80, 62, 0}}})});
    const auto m = midi_to_notes(file);
    CHECK(m.unpaired_note_ons == 1);
    REQUIRE(m.notes.size() == 2);
    CHECK(m.notes[0].pitch == 60);
    CHECK(m.notes[0].duration_beats == 2.0);
  }

  TEST_CASE("midi file ingestion yields segments") {
    std::vector<std::pair<std::uint32_t, Bytes>> events;
    for (int beat = 0; beat < 8; ++beat) {
      events.push_back({beat == 0 ? 0U : 0U, {0x90, static_cast<std::uint8_t>(60 + beat), 100}});
      events.push_back({120, {0x80, static_cast<std::uint8_t>(60 + beat), 0}});
    }
    const Bytes file = cat({header(0, 1, 120), track(events)});
    const auto path = std::filesystem::temp_directory_path() / "faders_midi_test.mid";
    {
      std::ofstream out(path, std::ios::binary);
      out.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
    }
    const auto r = ingest_midi(path.string());
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].segment.size() == 4);
    CHECK(r.records[1].segment.notes()[0].pitch == 64);
    CHECK(r.records[0].densities.rhythm_density == 4.0 / 16.0);
    std::filesystem::remove(path);
    CHECK_FADERS_ERROR(ingest_midi("/nonexistent.mid"), ErrorCode::IoError);
  }
}
