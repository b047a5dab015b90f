// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "faders/feature_labels.hpp"
#include "faders/token_codec.hpp"
#include "json.hpp"

namespace faders {

struct CorpusRecord {
  Segment segment;
  TokenSeq tokens;
  RhythmLabel rhythm;
  NoteLabel note;
  KeyVector key;
  Densities densities;
  std::optional<double> arousal_raw;
  std::optional<int> arousal_class;
  // Ground-truth class known to the synthetic generator; never used for
  // training, only for scoring cluster inference.
  std::optional<int> true_class;
};

// Builds a record with every label recomputed from the segment.
// Throws TokenOverflow when the segment does not fit the token budget.
CorpusRecord make_record(Segment segment, std::optional<double> arousal_raw = std::nullopt);

// Class 1 (high) above 0.1, class 0 (low) below -0.1, none in between.
// InvalidLabel outside [-1, 1].
std::optional<int> arousal_binarize(double raw);

struct CorpusSplit {
  std::vector<CorpusRecord> train;
  std::vector<CorpusRecord> validation;
  std::vector<CorpusRecord> test;
  std::uint64_t seed = 0;
};

// Seeded shuffle then 80/10/10 by count; train absorbs rounding remainder.
CorpusSplit split(std::vector<CorpusRecord> records, std::uint64_t seed);

// Generator with class-conditional density structure:
//   class 1: rhythm density ~ U[0.5, 0.9], polyphony ~ U[1, 2]
//   class 0: rhythm density ~ U[0.1, 0.4], polyphony ~ U[3, 6]
// in a random diatonic key. arousal_class is kept on ceil(fraction * n)
// records (at least one per class when fraction > 0).
std::vector<CorpusRecord> synth_corpus(std::size_t n_segments, double labelled_fraction, std::uint64_t seed);

// Keeps arousal labels on a seeded ceil(fraction * labelled) subset of the
// already-labelled records (at least one per present class when fraction > 0).
void subsample_labels(std::vector<CorpusRecord>& records, double fraction, std::uint64_t seed);

struct IngestResult {
  std::vector<CorpusRecord> records;
  std::size_t skipped_overflow = 0;
  std::size_t unpaired_notes = 0;
};

// One JSON object per line: {"notes": [[pitch, onset_step, duration_steps], ...],
// "arousal": optional real, "true_class": optional int}. Blank lines are ignored.
// ParseError carries the 1-based line number.
IngestResult ingest_jsonl(const std::string& path);
IngestResult parse_jsonl(const std::string& text);

nlohmann::json record_to_json(const CorpusRecord& record);
std::string to_jsonl(const std::vector<CorpusRecord>& records);

// Segment from the JSONL notes schema.
Segment segment_from_json(const nlohmann::json& notes);
nlohmann::json segment_to_json(const Segment& segment);

// Standard MIDI File ingestion (formats 0 and 1, ticks-per-quarter division).
struct MidiNotes {
  std::vector<RawNote> notes;  // sorted by onset then pitch
  double total_beats = 0.0;
  std::size_t unpaired_note_ons = 0;
};

MidiNotes midi_to_notes(const std::vector<std::uint8_t>& bytes);
IngestResult ingest_midi(const std::string& path);

}  // namespace faders
