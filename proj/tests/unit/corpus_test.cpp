// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "../common/expect.hpp"
#include "doctest.h"
#include "faders/corpus/corpus.hpp"

using namespace faders;

namespace {

bool labels_consistent(const CorpusRecord& r) {
  return r.tokens == encode_tokens(r.segment) && r.rhythm == rhythm_label(r.segment) &&
         r.note == note_label(r.segment) && r.densities == densities(r.segment) &&
         r.key == conditioning_key(r.segment);
}

std::multiset<std::string> fingerprints(const std::vector<CorpusRecord>& recs) {
  std::multiset<std::string> out;
  for (const auto& r : recs) out.insert(record_to_json(r).dump());
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("arousal_binarize") {
    CHECK(arousal_binarize(0.5) == 1);
    CHECK(arousal_binarize(-0.5) == 0);
    CHECK_FALSE(arousal_binarize(0.05).has_value());
    CHECK_FALSE(arousal_binarize(0.1).has_value());
    CHECK_FALSE(arousal_binarize(-0.1).has_value());
    CHECK(arousal_binarize(1.0) == 1);
    CHECK(arousal_binarize(-1.0) == 0);
    CHECK_FADERS_ERROR(arousal_binarize(1.5), ErrorCode::InvalidLabel);
    CHECK_FADERS_ERROR(arousal_binarize(-1.01), ErrorCode::InvalidLabel);
  }

  TEST_CASE("synth_corpus label rounding and structure") {
    const auto recs = synth_corpus(1000, 0.01, 7);
    REQUIRE(recs.size() == 1000);
    std::size_t labelled = 0;
    std::set<int> classes;
    double sum[2] = {0, 0}, note_sum[2] = {0, 0};
    std::size_t count[2] = {0, 0};
    for (const auto& r : recs) {
      CHECK(labels_consistent(r));
      REQUIRE(r.true_class.has_value());
      if (r.arousal_class) {
        ++labelled;
        classes.insert(*r.arousal_class);
        CHECK(*r.arousal_class == *r.true_class);
        REQUIRE(r.arousal_raw.has_value());
        CHECK(arousal_binarize(*r.arousal_raw) == r.arousal_class);
      } else {
        CHECK_FALSE(r.arousal_raw.has_value());
      }
      const int c = *r.true_class;
      sum[c] += r.densities.rhythm_density;
      note_sum[c] += r.densities.note_density;
      ++count[c];
    }
    CHECK(labelled == 10);
    CHECK(classes == std::set<int>{0, 1});
    const double mean1 = sum[1] / count[1], mean0 = sum[0] / count[0];
    CHECK(mean1 - mean0 > 0.2);
    CHECK(note_sum[0] / count[0] > note_sum[1] / count[1]);
    CHECK(to_jsonl(recs) == to_jsonl(synth_corpus(1000, 0.01, 7)));
    CHECK(to_jsonl(recs) != to_jsonl(synth_corpus(1000, 0.01, 8)));
  }

  TEST_CASE("synth_corpus label fractions") {
    for (double f : {0.0, 0.002, 0.1, 1.0}) {
      const auto recs = synth_corpus(200, f, 3);
      const auto n = std::count_if(recs.begin(), recs.end(), [](const auto& r) { return r.arousal_class.has_value(); });
      if (f == 0.0) {
        CHECK(n == 0);
      } else {
        CHECK(static_cast<std::size_t>(n) == std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(f * 200 - 1e-9))));
      }
    }
  }

  TEST_CASE("split ratios and determinism") {
    auto recs = synth_corpus(101, 0.0, 1);
    const auto s = split(recs, 4);
    CHECK(s.train.size() == 81);
    CHECK(s.validation.size() == 10);
    CHECK(s.test.size() == 10);
    recs.resize(100);
    const auto h = split(recs, 4);
    CHECK(h.train.size() == 80);
    CHECK(h.validation.size() == 10);
    CHECK(h.test.size() == 10);
    const auto h2 = split(recs, 4);
    CHECK(to_jsonl(h.test) == to_jsonl(h2.test));
    CHECK(to_jsonl(h.train) == to_jsonl(h2.train));
    // disjoint and exhaustive, as multisets of records
    std::vector<CorpusRecord> all = h.train;
    all.insert(all.end(), h.validation.begin(), h.validation.end());
    all.insert(all.end(), h.test.begin(), h.test.end());
    CHECK(fingerprints(all) == fingerprints(recs));
    CHECK(to_jsonl(split(recs, 5).test) != to_jsonl(h.test));
    CHECK_FADERS_ERROR(split({}, 1), ErrorCode::EmptyCorpus);
  }

  TEST_CASE("subsample_labels") {
    auto recs = synth_corpus(300, 1.0, 2);
    subsample_labels(recs, 0.05, 9);
    std::set<int> classes;
    std::size_t n = 0;
    for (const auto& r : recs) {
      if (r.arousal_class) {
        ++n;
        classes.insert(*r.arousal_class);
      } else {
        CHECK_FALSE(r.arousal_raw.has_value());
      }
    }
    CHECK(n == 15);
    CHECK(classes.size() == 2);
  }

  TEST_CASE("jsonl parsing") {
    auto r = parse_jsonl("{\"notes\": [[60,0,4]]}\n");
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].densities.rhythm_density == 1.0 / 16.0);
    CHECK_FALSE(r.records[0].arousal_class.has_value());

    r = parse_jsonl("{\"notes\": [[60,0,4]], \"arousal\": 0.0}\n\n{\"notes\": [[64,2,2],[67,2,2]], \"arousal\": 0.8}\n");
    REQUIRE(r.records.size() == 2);
    CHECK_FALSE(r.records[0].arousal_class.has_value());
    CHECK(r.records[0].arousal_raw == 0.0);
    CHECK(r.records[1].arousal_class == 1);
    CHECK(r.records[1].densities.note_density == doctest::Approx(4.0 / 16.0));

    std::string text;
    for (int i = 0; i < 6; ++i) text += "{\"notes\": [[60,0,1]]}\n";
    text += "{\"notes\": [[60,0,\n";
    try {
      parse_jsonl(text);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.detail()).find("line 7") != std::string::npos);
    }
    CHECK_FADERS_ERROR(parse_jsonl("{\"notes\": [[200,0,1]]}\n"), ErrorCode::InvalidPitch);
    CHECK_FADERS_ERROR(parse_jsonl("{\"notes\": [[60,0,1]], \"arousal\": 3}\n"), ErrorCode::InvalidLabel);
    CHECK_FADERS_ERROR(parse_jsonl("{\"notes\": 5}\n"), ErrorCode::ParseError);

    // 60 staggered notes overflow the token budget and are skipped
    nlohmann::json dense = nlohmann::json::array();
    for (int p = 0; p < 60; ++p) dense.push_back({40 + p, p % 16, 1});
    r = parse_jsonl(nlohmann::json{{"notes", dense}}.dump() + "\n{\"notes\": [[60,0,1]]}\n");
    CHECK(r.skipped_overflow == 1);
    CHECK(r.records.size() == 1);
  }

  TEST_CASE("jsonl round trip and file ingestion") {
    const auto recs = synth_corpus(120, 0.1, 5);
    const auto path = std::filesystem::temp_directory_path() / "faders_corpus_test.jsonl";
    {
      std::ofstream out(path);
      out << to_jsonl(recs);
    }
    const auto back = ingest_jsonl(path.string());
    REQUIRE(back.records.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(back.records[i].segment == recs[i].segment);
      CHECK(back.records[i].arousal_class == recs[i].arousal_class);
      CHECK(back.records[i].true_class == recs[i].true_class);
      CHECK(labels_consistent(back.records[i]));
    }
    std::filesystem::remove(path);
    CHECK_FADERS_ERROR(ingest_jsonl("/nonexistent/corpus.jsonl"), ErrorCode::IoError);
  }
}
