// SPDX-License-Identifier: Apache-2.0
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "faders/model/checkpoint.hpp"
#include "faders/model/train.hpp"
#include "faders/service/io.hpp"
#include "faders/service/service.hpp"
#include "httplib.h"

using namespace faders;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("faders_service_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ModelConfig tiny_config() {
  ModelConfig c = ModelConfig::desk();
  c.z_dim = 4;
  c.hidden_dim = 8;
  c.embed_dim = 4;
  c.batch_size = 8;
  c.train_steps = 20;
  return c;
}

// One trained tiny checkpoint shared by every case in this file.
const fs::path& checkpoint_dir() {
  static const fs::path dir = [] {
    const auto d = scratch("ckpt");
    auto trained = train(tiny_config(), synth_corpus(120, 0.1, 3), 3);
    save_checkpoint(trained.model, d.string());
    return d;
  }();
  return dir;
}

json post(const Service& s, const std::string& path, const json& body, int expect = 200) {
  const auto r = s.handle("POST", path, body.dump());
  INFO(path << " -> " << r.body.dump());
  CHECK(r.status == expect);
  return r.body;
}

const json kNotes = json::array({json::array({60, 0, 4}), json::array({64, 4, 2}), json::array({67, 8, 4}),
                                 json::array({72, 12, 2})});

int run_cli(const std::string& args, std::string* out = nullptr) {
  const auto capture = fs::temp_directory_path() / "faders_cli_stdout.txt";
  const std::string cmd = std::string(FADERS_CLI_PATH) + " " + args + " >" + capture.string() + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  if (out != nullptr) *out = read_file(capture.string());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_SUITE("service_cli") {
  TEST_CASE("routing and checkpoint gating") {
    Service s;
    CHECK(s.handle("GET", "/model/info", "").status == 409);
    CHECK(s.handle("POST", "/encode", json{{"notes", kNotes}}.dump()).status == 409);
    CHECK(s.handle("GET", "/nope", "").status == 404);
    CHECK(s.handle("GET", "/encode", "").status == 405);
    CHECK(s.handle("POST", "/model/info", "").status == 405);
    s.load(checkpoint_dir().string());
    const auto info = s.handle("GET", "/model/info", "");
    REQUIRE(info.status == 200);
    const auto ckpt = s.checkpoint();
    CHECK(info.body.at("checkpoint_id") == ckpt->id);
    CHECK(info.body.at("mode") == "gm_vae");
    CHECK(info.body.at("z_dim") == 4);
    CHECK(info.body.at("clusters") == 2);
    CHECK(info.body.at("latents") == json::array({"rhythm", "note"}));
    CHECK(info.body.at("z_ranges").at("rhythm").at("max").get<double>() == ckpt->model.z_ranges()[0].max);
    CHECK(info.body.at("prior_means").at("note") == json(ckpt->model.prior_means(1)));
  }

  TEST_CASE("encode, decode, fade, transfer") {
    Service s;
    s.load(checkpoint_dir().string());
    const auto& model = s.checkpoint()->model;
    const auto enc = post(s, "/encode", {{"notes", kNotes}});
    CHECK(enc.at("tokens").size() == 14);
    CHECK(enc.at("densities").at("rhythm_density") == 0.25);
    CHECK(enc.at("checkpoint_id") == s.checkpoint()->id);
    const auto& lat = enc.at("latents");
    CHECK(lat.at("rhythm").at("q_c").size() == 2);
    const double f = lat.at("rhythm").at("fader").get<double>();
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);

    // encode then decode reproduces greedy reconstruction
    const Segment seg = segment_from_json(kNotes);
    const TokenSeq toks = encode_tokens(seg);
    const auto codes = model.encode_means(std::span<const TokenSeq>(&toks, 1));
    const KeyVector key = conditioning_key(seg);
    const auto recon = token_ids(model.greedy_decode(codes, std::span<const KeyVector>(&key, 1)).front());
    const auto dec = post(s, "/decode", {{"z", lat}, {"key_index", enc.at("key_index")}});
    CHECK(dec.at("tokens") == json(recon));
    const auto ids = enc.at("tokens").get<std::vector<int>>();
    CHECK(post(s, "/fade", {{"tokens", ids}}).at("tokens") == json(recon));
    CHECK(post(s, "/fade", {{"notes", kNotes}}) == post(s, "/fade", {{"notes", kNotes}}));
    const auto arr = post(s, "/decode", {{"z", json::array({lat.at("rhythm").at("mu"), lat.at("note").at("mu")})},
                                         {"key_index", key.index}});
    CHECK(arr.at("tokens") == json(recon));

    const auto top = post(s, "/fade", {{"notes", kNotes}, {"rhythm_fader", 1.0}});
    CHECK(top.at("latents").at("rhythm").at("z_d").get<double>() == model.z_ranges()[0].max);
    CHECK(top.at("latents").at("note").at("mu") == lat.at("note").at("mu"));
    const auto bottom = post(s, "/fade", {{"notes", kNotes}, {"note_fader", 0.0}});
    CHECK(bottom.at("latents").at("note").at("z_d").get<double>() == model.z_ranges()[1].min);

    const auto t0 = post(s, "/transfer", {{"notes", kNotes}, {"target_class", 1}, {"alpha", 0.0}});
    CHECK(t0.at("tokens") == json(recon));
    const auto t1 = post(s, "/transfer", {{"notes", kNotes}, {"target_class", 0}});
    CHECK(t1.at("alpha") == 1.0);
    CHECK(t1.contains("densities_before"));
  }

  TEST_CASE("request errors") {
    Service s;
    s.load(checkpoint_dir().string());
    post(s, "/encode", "not json", 400);
    CHECK(s.handle("POST", "/encode", "{").status == 400);
    post(s, "/encode", json::object(), 400);
    post(s, "/fade", {{"notes", kNotes}, {"rhythm_fader", 1.5}}, 400);
    post(s, "/fade", {{"notes", kNotes}, {"rhythm_fader", "high"}}, 400);
    post(s, "/transfer", {{"notes", kNotes}}, 400);
    post(s, "/transfer", {{"notes", kNotes}, {"target_class", 1}, {"alpha", 2.0}}, 400);
    post(s, "/decode", {{"z", json::array({json::array({1, 2})})}}, 400);
    const auto bad = post(s, "/encode", {{"notes", json::array({json::array({200, 0, 1})})}}, 422);
    CHECK(bad.at("error") == "InvalidPitch");
    json dense = json::array();
    for (int p = 0; p < 60; ++p) dense.push_back({40 + p, p % 16, 1});
    CHECK(post(s, "/encode", {{"notes", dense}}, 422).at("error") == "TokenOverflow");
    CHECK(post(s, "/transfer", {{"notes", kNotes}, {"target_class", 3}}, 422).at("error") == "IndexError");
  }

  TEST_CASE("fader mapping round trip") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 500; ++i) {
      double a = u(gen), b = u(gen);
      if (a > b) std::swap(a, b);
      if (b - a < 1e-3) continue;
      const ZRange r{a, b};
      const double f = static_cast<double>(i % 101) / 100.0;
      CHECK(std::abs(z_to_fader(fader_to_z(f, r), r) - f) <= 1e-6);
    }
    CHECK(fader_to_z(1.0, {-2, 3}) == 3.0);
    CHECK(z_to_fader(10.0, {-2, 3}) == 1.0);
    CHECK(z_to_fader(-10.0, {-2, 3}) == 0.0);
  }

  TEST_CASE("hot swap keeps serving") {
    Service s;
    s.load(checkpoint_dir().string());
    const auto first = s.checkpoint();
    auto other = std::make_shared<LoadedCheckpoint>(load_checkpoint(checkpoint_dir().string()));
    s.set_checkpoint(other);
    CHECK(s.checkpoint() == other);
    CHECK(first->id == other->id);
    CHECK(s.handle("GET", "/model/info", "").status == 200);
  }

  TEST_CASE("live http listener") {
    Service s;
    s.load(checkpoint_dir().string());
    const int port = s.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread server([&] { s.serve_bound(); });
    s.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    auto info = client.Get("/model/info");
    REQUIRE(info);
    CHECK(info->status == 200);
    CHECK(info->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
    CHECK(json::parse(info->body).at("checkpoint_id") == s.checkpoint()->id);
    auto enc = client.Post("/encode", json{{"notes", kNotes}}.dump(), "application/json");
    REQUIRE(enc);
    CHECK(enc->status == 200);
    CHECK(json::parse(enc->body) == s.handle("POST", "/encode", json{{"notes", kNotes}}.dump()).body);
    auto bad = client.Post("/fade", "{", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    auto pre = client.Options("/fade");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    s.stop();
    server.join();
  }

  TEST_CASE("io helpers") {
    CHECK(csv_row({"a", "b,c", "say \"hi\"", "line\nbreak"}) == "a,\"b,c\",\"say \"\"hi\"\"\",\"line\nbreak\"\r\n");
    const auto dir = scratch("io");
    const auto path = (dir / "x.txt").string();
    write_file_atomic(path, "one");
    write_file_atomic(path, "two");
    CHECK(read_file(path) == "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    CHECK(files == 1);
  }

  TEST_CASE("cli exit codes and artifacts") {
    const auto dir = scratch("cli");
    const auto c1 = (dir / "c1.jsonl").string(), c2 = (dir / "c2.jsonl").string();
    CHECK(run_cli("") == 1);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("corpus synth --n 150 --seed 7 --labelled-fraction 0.1 --out " + c1) == 0);
    CHECK(run_cli("corpus synth --n 150 --seed 7 --labelled-fraction 0.1 --out " + c2) == 0);
    CHECK(read_file(c1) == read_file(c2));
    CHECK(run_cli("train --corpus " + c1 + " --checkpoint " + (dir / "m").string() + " --mode bogus") == 1);
    CHECK(run_cli("train --corpus " + (dir / "missing.jsonl").string() + " --checkpoint " + (dir / "m").string()) == 2);
    {
      std::ofstream bad(dir / "bad.jsonl");
      bad << "{\"notes\": [[60,0,1]]}\n{oops\n";
    }
    CHECK(run_cli("corpus ingest --input " + (dir / "bad.jsonl").string()) == 2);

    const auto cfg = (dir / "tiny.json").string();
    write_file_atomic(cfg, to_json(tiny_config()).dump());
    const auto ckpt = (dir / "m").string();
    std::string out;
    CHECK(run_cli("train --corpus " + c1 + " --config " + cfg + " --mode gm_vae --steps 5 --seed 7 --checkpoint " + ckpt,
                  &out) == 0);
    CHECK(fs::exists(dir / "m" / "manifest.json"));
    CHECK(fs::exists(dir / "m" / "tensors.bin"));
    const auto curve = read_file((dir / "m" / "loss_curve.csv").string());
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 6);
    const auto id = json::parse(out).at("checkpoint_id").get<std::string>();
    CHECK(load_checkpoint(ckpt).id == id);

    CHECK(run_cli("eval --checkpoint " + ckpt + " --corpus " + c1 + " --seed 7 --T 4 --M 5", &out) == 0);
    const auto report = json::parse(out);
    CHECK(report.at("checkpoint_id") == id);
    std::string again;
    CHECK(run_cli("eval --checkpoint " + ckpt + " --corpus " + c1 + " --seed 7 --T 4 --M 5", &again) == 0);
    CHECK(out == again);
    CHECK(run_cli("eval --checkpoint " + (dir / "nowhere").string() + " --corpus " + c1) == 2);
    CHECK(run_cli("sweep --checkpoint " + ckpt + " --corpus " + c1 + " --feature note --T 4 --M 3", &out) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') == 1 + 3 * 4);
    CHECK(run_cli("transfer --checkpoint " + ckpt + " --corpus " + c1 + " --target 1 --alpha 0.5", &out) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') == 150);
    CHECK(run_cli("transfer --checkpoint " + ckpt + " --corpus " + c1 + " --target 1 --alpha 3") == 1);
    CHECK(run_cli("project --checkpoint " + ckpt + " --corpus " + c1 + " --feature rhythm", &out) == 0);
    CHECK(out.rfind("x,y,label", 0) == 0);
  }
}
