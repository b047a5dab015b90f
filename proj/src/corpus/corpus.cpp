// SPDX-License-Identifier: Apache-2.0
#include "faders/corpus/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "faders/diff/rng.hpp"
#include "faders/error.hpp"

namespace faders {

using nlohmann::json;

CorpusRecord make_record(Segment segment, std::optional<double> arousal_raw) {
  CorpusRecord r;
  r.tokens = encode_tokens(segment);
  r.rhythm = rhythm_label(segment);
  r.note = note_label(segment);
  r.key = conditioning_key(segment);
  r.densities = {rhythm_density(r.rhythm), note_density(r.note)};
  r.segment = std::move(segment);
  if (arousal_raw) {
    r.arousal_raw = arousal_raw;
    r.arousal_class = arousal_binarize(*arousal_raw);
  }
  return r;
}

std::optional<int> arousal_binarize(double raw) {
  if (!(raw >= -1.0 && raw <= 1.0)) throw Error(ErrorCode::InvalidLabel, "arousal " + std::to_string(raw));
  if (raw > 0.1) return 1;
  if (raw < -0.1) return 0;
  return std::nullopt;
}

CorpusSplit split(std::vector<CorpusRecord> records, std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorCode::EmptyCorpus, "nothing to split");
  auto gen = diff::SeedSequence(seed).stream("split");
  diff::shuffle(records.begin(), records.end(), gen);
  const std::size_t n = records.size();
  const std::size_t n_val = n / 10;
  const std::size_t n_test = n / 10;
  const std::size_t n_train = n - n_val - n_test;
  CorpusSplit s;
  s.seed = seed;
  auto it = std::make_move_iterator(records.begin());
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(it + static_cast<std::ptrdiff_t>(n_train), it + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_val), std::make_move_iterator(records.end()));
  return s;
}

namespace {

constexpr std::array<int, 7> kMajorScale = {0, 2, 4, 5, 7, 9, 11};
constexpr std::array<int, 7> kMinorScale = {0, 2, 3, 5, 7, 8, 10};

std::size_t labelled_count(double fraction, std::size_t n) {
  if (fraction <= 0.0 || n == 0) return 0;
  const double exact = fraction * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(exact - 1e-9)));
}

// Picks `count` of `candidates` in shuffled order, taking the first of each
// class before anything else so every present class is represented.
std::vector<std::size_t> pick_labelled(std::vector<std::size_t> candidates, const std::vector<int>& cls,
                                       std::size_t count, std::mt19937_64& gen) {
  diff::shuffle(candidates.begin(), candidates.end(), gen);
  std::vector<std::size_t> chosen;
  std::vector<bool> taken(candidates.size(), false);
  std::array<bool, 2> seen{};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const int c = cls[candidates[i]];
    if (c >= 0 && c < 2 && !seen[static_cast<std::size_t>(c)]) {
      seen[static_cast<std::size_t>(c)] = true;
      chosen.push_back(candidates[i]);
      taken[i] = true;
    }
  }
  count = std::max(count, chosen.size());
  for (std::size_t i = 0; i < candidates.size() && chosen.size() < count; ++i) {
    if (!taken[i]) chosen.push_back(candidates[i]);
  }
  return chosen;
}

int scale_pitch(int base, int tonic, const std::array<int, 7>& scale, int degree) {
  const int octave = degree >= 0 ? degree / 7 : -((6 - degree) / 7);
  const int idx = degree - octave * 7;
  return base + tonic + 12 * octave + scale[static_cast<std::size_t>(idx)];
}

struct SynthSpec {
  int cls = 0;
  double rhythm = 0;
  double polyphony = 0;
  int tonic = 0;
  bool minor = false;
};

Segment synth_segment(const SynthSpec& spec, std::mt19937_64& gen) {
  const auto& scale = spec.minor ? kMinorScale : kMajorScale;
  const int n_onsets = std::clamp(static_cast<int>(std::lround(spec.rhythm * kStepsPerSegment)), 1, kStepsPerSegment);
  std::vector<int> others;
  for (int s = 1; s < kStepsPerSegment; ++s) others.push_back(s);
  diff::shuffle(others.begin(), others.end(), gen);
  std::vector<int> onsets = {0};
  onsets.insert(onsets.end(), others.begin(), others.begin() + (n_onsets - 1));
  std::sort(onsets.begin(), onsets.end());

  const int whole = static_cast<int>(std::floor(spec.polyphony));
  const double frac = spec.polyphony - whole;
  int melody = static_cast<int>(diff::uniform_index(gen, 7)) + 7;
  std::vector<NoteEvent> notes;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    const int onset = onsets[i];
    const int next = i + 1 < onsets.size() ? onsets[i + 1] : kStepsPerSegment;
    int duration = next - onset;
    if (duration > 1 && diff::uniform01(gen) < 0.2) duration -= 1;
    const int size = std::max(1, whole + (diff::uniform01(gen) < frac ? 1 : 0));
    if (spec.cls == 1) {
      // melody walk with an optional third below
      const int step = static_cast<int>(diff::uniform_index(gen, 5)) - 2;
      melody = std::clamp(melody + step, 4, 14);
      for (int j = 0; j < size; ++j) {
        notes.push_back({scale_pitch(48, spec.tonic, scale, melody - 2 * j), onset, duration});
      }
    } else {
      const int root = static_cast<int>(diff::uniform_index(gen, 7));
      for (int j = 0; j < size; ++j) {
        notes.push_back({scale_pitch(36, spec.tonic, scale, root + 2 * j), onset, duration});
      }
    }
  }
  return Segment::from_notes(std::move(notes));
}

}  // namespace

std::vector<CorpusRecord> synth_corpus(std::size_t n_segments, double labelled_fraction, std::uint64_t seed) {
  if (labelled_fraction < 0.0 || labelled_fraction > 1.0) {
    throw Error(ErrorCode::InvalidLabel, "labelled_fraction " + std::to_string(labelled_fraction));
  }
  const diff::SeedSequence seeds(seed);
  auto gen = seeds.stream("synth.notes");
  std::vector<CorpusRecord> records;
  records.reserve(n_segments);
  std::vector<int> classes;
  for (std::size_t i = 0; i < n_segments; ++i) {
    SynthSpec spec;
    spec.cls = static_cast<int>(diff::uniform_index(gen, 2));
    if (spec.cls == 1) {
      spec.rhythm = diff::uniform(gen, 0.5, 0.9);
      spec.polyphony = diff::uniform(gen, 1.0, 2.0);
    } else {
      spec.rhythm = diff::uniform(gen, 0.1, 0.4);
      spec.polyphony = diff::uniform(gen, 3.0, 6.0);
    }
    spec.tonic = static_cast<int>(diff::uniform_index(gen, 12));
    spec.minor = diff::uniform01(gen) < 0.5;
    // Redraw the notes (same targets) on the rare token overflow.
    for (;;) {
      try {
        auto rec = make_record(synth_segment(spec, gen));
        rec.true_class = spec.cls;
        records.push_back(std::move(rec));
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TokenOverflow) throw;
      }
    }
    classes.push_back(spec.cls);
  }

  if (labelled_fraction <= 0.0) return records;
  auto label_gen = seeds.stream("synth.labels");
  std::vector<std::size_t> all(n_segments);
  for (std::size_t i = 0; i < n_segments; ++i) all[i] = i;
  for (std::size_t i : pick_labelled(all, classes, labelled_count(labelled_fraction, n_segments), label_gen)) {
    auto& r = records[i];
    const double raw = r.true_class == 1 ? diff::uniform(label_gen, 0.2, 1.0) : diff::uniform(label_gen, -1.0, -0.2);
    r.arousal_raw = raw;
    r.arousal_class = arousal_binarize(raw);
  }
  return records;
}

void subsample_labels(std::vector<CorpusRecord>& records, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw Error(ErrorCode::InvalidLabel, "fraction " + std::to_string(fraction));
  std::vector<std::size_t> labelled;
  std::vector<int> classes(records.size(), -1);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].arousal_class) {
      labelled.push_back(i);
      classes[i] = *records[i].arousal_class;
    }
  }
  std::vector<bool> keep(records.size(), false);
  if (fraction > 0.0) {
    auto gen = diff::SeedSequence(seed).stream("subsample_labels");
    for (std::size_t i : pick_labelled(labelled, classes, labelled_count(fraction, labelled.size()), gen)) keep[i] = true;
  }
  for (std::size_t i : labelled) {
    if (!keep[i]) {
      records[i].arousal_class.reset();
      records[i].arousal_raw.reset();
    }
  }
}

Segment segment_from_json(const json& notes) {
  if (!notes.is_array()) throw Error(ErrorCode::ParseError, "\"notes\" must be an array");
  std::vector<NoteEvent> events;
  for (const auto& n : notes) {
    if (!n.is_array() || n.size() != 3) throw Error(ErrorCode::ParseError, "note must be [pitch, onset, duration]");
    for (const auto& v : n) {
      if (!v.is_number_integer()) throw Error(ErrorCode::ParseError, "note fields must be integers");
    }
    const int onset = n[1].get<int>();
    const int duration = n[2].get<int>();
    if (onset < 0 || onset >= kStepsPerSegment || duration < 1) {
      throw Error(ErrorCode::ParseError, "note " + n.dump() + " outside the segment grid");
    }
    events.push_back({n[0].get<int>(), onset, duration});
  }
  return Segment::from_notes(std::move(events));
}

json segment_to_json(const Segment& segment) {
  json notes = json::array();
  for (const auto& n : segment.notes()) notes.push_back({n.pitch, n.onset_step, n.duration_steps});
  return notes;
}

json record_to_json(const CorpusRecord& r) {
  json j;
  j["notes"] = segment_to_json(r.segment);
  if (r.arousal_raw) {
    j["arousal"] = *r.arousal_raw;
  } else if (r.arousal_class) {
    j["arousal_class"] = *r.arousal_class;
  }
  if (r.true_class) j["true_class"] = *r.true_class;
  return j;
}

std::string to_jsonl(const std::vector<CorpusRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

IngestResult parse_jsonl(const std::string& text) {
  IngestResult result;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    }
    try {
      if (!j.is_object() || !j.contains("notes")) throw Error(ErrorCode::ParseError, "expected an object with \"notes\"");
      Segment seg = segment_from_json(j.at("notes"));
      std::optional<double> raw;
      if (j.contains("arousal") && !j.at("arousal").is_null()) {
        if (!j.at("arousal").is_number()) throw Error(ErrorCode::ParseError, "\"arousal\" must be a number");
        raw = j.at("arousal").get<double>();
      }
      CorpusRecord rec;
      try {
        rec = make_record(std::move(seg), raw);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TokenOverflow) throw;
        ++result.skipped_overflow;
        continue;
      }
      if (!raw && j.contains("arousal_class")) {
        const int c = j.at("arousal_class").get<int>();
        if (c != 0 && c != 1) throw Error(ErrorCode::InvalidLabel, "arousal_class " + std::to_string(c));
        rec.arousal_class = c;
      }
      if (j.contains("true_class")) rec.true_class = j.at("true_class").get<int>();
      result.records.push_back(std::move(rec));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.detail());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    }
  }
  return result;
}

IngestResult ingest_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str());
}

}  // namespace faders
