// SPDX-License-Identifier: Apache-2.0
#include "faders/service/service.hpp"

#include <algorithm>

#include "faders/corpus/corpus.hpp"
#include "faders/error.hpp"
#include "faders/transfer.hpp"
#include "httplib.h"

namespace faders {

using nlohmann::json;

struct Service::Http {
  httplib::Server server;
};

double fader_to_z(double fader, const ZRange& range) { return range.min + fader * (range.max - range.min); }

double z_to_fader(double z, const ZRange& range) {
  const double span = range.max - range.min;
  if (!(span > 0.0)) return 0.0;
  return std::clamp((z - range.min) / span, 0.0, 1.0);
}

namespace {

// Body-level problems, reported as 400.
struct BadRequest {
  std::string detail;
};

struct SegmentInput {
  Segment segment;
  TokenSeq tokens;
  KeyVector key;
};

std::vector<std::string> latent_names(const FaderNet<float>& model) {
  if (model.latent_count() == 1) return {"latent"};
  return {std::string(to_string(Feature::Rhythm)), std::string(to_string(Feature::Note))};
}

json parse_body(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BadRequest{std::string("invalid JSON: ") + e.what()};
  }
  if (!j.is_object()) throw BadRequest{"body must be a JSON object"};
  return j;
}

std::optional<double> optional_number(const json& body, const char* field) {
  if (!body.contains(field) || body.at(field).is_null()) return std::nullopt;
  if (!body.at(field).is_number()) throw BadRequest{std::string("\"") + field + "\" must be a number"};
  return body.at(field).get<double>();
}

std::optional<int> optional_int(const json& body, const char* field) {
  if (!body.contains(field) || body.at(field).is_null()) return std::nullopt;
  if (!body.at(field).is_number_integer()) throw BadRequest{std::string("\"") + field + "\" must be an integer"};
  return body.at(field).get<int>();
}

std::optional<KeyVector> key_override(const json& body) {
  const auto k = optional_int(body, "key_index");
  if (!k) return std::nullopt;
  if (*k < 0 || *k >= kKeyClasses) throw BadRequest{"\"key_index\" must be in [0, 23]"};
  return KeyVector{*k};
}

SegmentInput segment_input(const json& body) {
  SegmentInput in;
  if (body.contains("tokens")) {
    const auto& ids = body.at("tokens");
    if (!ids.is_array()) throw BadRequest{"\"tokens\" must be an array of token ids"};
    for (const auto& id : ids) {
      if (!id.is_number_integer()) throw BadRequest{"token ids must be integers"};
      in.tokens.push_back(Token::from_id(id.get<int>()));
    }
    if (in.tokens.size() > kMaxTokens) {
      throw Error(ErrorCode::TokenOverflow, std::to_string(in.tokens.size()) + " tokens");
    }
    in.segment = decode_tokens(in.tokens);
  } else if (body.contains("notes")) {
    try {
      in.segment = segment_from_json(body.at("notes"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) throw BadRequest{e.detail()};
      throw;
    }
    in.tokens = encode_tokens(in.segment);
  } else {
    throw BadRequest{"expected \"notes\" or \"tokens\""};
  }
  in.key = key_override(body).value_or(conditioning_key(in.segment));
  return in;
}

json densities_json(const Densities& d) {
  return {{"rhythm_density", d.rhythm_density}, {"note_density", d.note_density}};
}

json decoded_json(const TokenSeq& tokens) {
  const Segment seg = decode_tokens(tokens);
  return {{"tokens", token_ids(tokens)}, {"notes", segment_to_json(seg)}, {"densities", densities_json(densities(seg))}};
}

json latents_json(const FaderNet<float>& model, const LatentCode& code) {
  const auto names = latent_names(model);
  const std::size_t d = model.config().regularized_dim;
  json out = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    json entry = {{"mu", code.z[i]}, {"z_d", code.z[i][d]}};
    if (i < model.z_ranges().size()) entry["fader"] = z_to_fader(code.z[i][d], model.z_ranges()[i]);
    if (model.config().has_mixture_prior()) entry["q_c"] = model.infer_cluster(i, code.z[i]);
    out[names[i]] = entry;
  }
  return out;
}

LatentCode encode_one(const FaderNet<float>& model, const TokenSeq& tokens) {
  return model.encode_means(std::span<const TokenSeq>(&tokens, 1)).front();
}

TokenSeq decode_one(const FaderNet<float>& model, const LatentCode& code, const KeyVector& key) {
  return model.greedy_decode(std::span<const LatentCode>(&code, 1), std::span<const KeyVector>(&key, 1)).front();
}

json model_info(const LoadedCheckpoint& ckpt) {
  const auto& model = ckpt.model;
  const auto& c = model.config();
  const auto names = latent_names(model);
  json ranges = json::object();
  json means = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i < model.z_ranges().size()) ranges[names[i]] = {{"min", model.z_ranges()[i].min}, {"max", model.z_ranges()[i].max}};
    if (c.has_mixture_prior()) means[names[i]] = model.prior_means(i);
  }
  return {
      {"checkpoint_id", ckpt.id},
      {"mode", std::string(to_string(c.mode))},
      {"preset", c.preset},
      {"latents", names},
      {"z_dim", c.z_dim},
      {"hidden_dim", c.hidden_dim},
      {"embed_dim", c.embed_dim},
      {"vocab_size", kVocabSize},
      {"clusters", c.clusters},
      {"regularized_dim", c.regularized_dim},
      {"prior_variance", c.prior_variance},
      {"z_ranges", ranges},
      {"prior_means", means},
      {"supports_transfer", c.has_mixture_prior()},
      {"supports_faders", model.latent_count() == kFeatureCount},
  };
}

json handle_encode(const LoadedCheckpoint& ckpt, const json& body) {
  const auto in = segment_input(body);
  const auto code = encode_one(ckpt.model, in.tokens);
  return {{"checkpoint_id", ckpt.id},
          {"key_index", in.key.index},
          {"tokens", token_ids(in.tokens)},
          {"densities", densities_json(densities(in.segment))},
          {"latents", latents_json(ckpt.model, code)}};
}

LatentCode code_from_json(const FaderNet<float>& model, const json& body) {
  if (!body.contains("z")) throw BadRequest{"expected \"z\""};
  const auto& z = body.at("z");
  const auto names = latent_names(model);
  LatentCode code;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const json* v = nullptr;
    if (z.is_object() && z.contains(names[i])) {
      v = &z.at(names[i]);
      // /encode output can be passed back verbatim
      if (v->is_object() && v->contains("mu")) v = &v->at("mu");
    } else if (z.is_array() && i < z.size()) {
      v = &z.at(i);
    }
    if (v == nullptr) throw BadRequest{"missing latent \"" + names[i] + "\""};
    if (!v->is_array() || v->size() != model.config().z_dim) {
      throw BadRequest{"latent \"" + names[i] + "\" must hold " + std::to_string(model.config().z_dim) + " numbers"};
    }
    std::vector<double> vec;
    for (const auto& x : *v) {
      if (!x.is_number()) throw BadRequest{"latent values must be numbers"};
      vec.push_back(x.get<double>());
    }
    code.z.push_back(std::move(vec));
  }
  return code;
}

json handle_decode(const LoadedCheckpoint& ckpt, const json& body) {
  const LatentCode code = code_from_json(ckpt.model, body);
  const KeyVector key = key_override(body).value_or(KeyVector{0});
  json out = decoded_json(decode_one(ckpt.model, code, key));
  out["checkpoint_id"] = ckpt.id;
  out["key_index"] = key.index;
  return out;
}

json handle_fade(const LoadedCheckpoint& ckpt, const json& body) {
  const auto& model = ckpt.model;
  const auto in = segment_input(body);
  const std::array<std::optional<double>, kFeatureCount> faders = {optional_number(body, "rhythm_fader"),
                                                                   optional_number(body, "note_fader")};
  for (const auto& f : faders) {
    if (f && !(*f >= 0.0 && *f <= 1.0)) throw BadRequest{"fader values must be in [0, 1]"};
  }
  LatentCode code = encode_one(model, in.tokens);
  const std::size_t d = model.config().regularized_dim;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!faders[i]) continue;
    if (model.latent_count() != kFeatureCount) {
      throw Error(ErrorCode::UnsupportedInMode, "faders need one latent per feature");
    }
    if (i >= model.z_ranges().size()) throw Error(ErrorCode::IndexError, "checkpoint has no fader range");
    code.z[i][d] = fader_to_z(*faders[i], model.z_ranges()[i]);
  }
  json out = decoded_json(decode_one(model, code, in.key));
  out["checkpoint_id"] = ckpt.id;
  out["key_index"] = in.key.index;
  out["latents"] = latents_json(model, code);
  return out;
}

json handle_transfer(const LoadedCheckpoint& ckpt, const json& body) {
  const auto target = optional_int(body, "target_class");
  if (!target) throw BadRequest{"expected integer \"target_class\""};
  const double alpha = optional_number(body, "alpha").value_or(1.0);
  if (!(alpha >= 0.0 && alpha <= 1.5)) throw BadRequest{"\"alpha\" must be in [0, 1.5]"};
  const auto in = segment_input(body);
  json out = transfer_to_json(transfer(ckpt.model, in.segment, *target, alpha));
  out["checkpoint_id"] = ckpt.id;
  out["target_class"] = *target;
  out["alpha"] = alpha;
  return out;
}

HttpResponse error_response(int status, std::string_view name, const std::string& detail) {
  return {status, {{"error", name}, {"detail", detail}}};
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)) {}
Service::~Service() = default;

void Service::load(const std::string& checkpoint_dir) {
  set_checkpoint(std::make_shared<const LoadedCheckpoint>(load_checkpoint(checkpoint_dir)));
}

void Service::set_checkpoint(std::shared_ptr<const LoadedCheckpoint> checkpoint) {
  std::lock_guard lock(mutex_);
  checkpoint_ = std::move(checkpoint);
}

std::shared_ptr<const LoadedCheckpoint> Service::checkpoint() const {
  std::lock_guard lock(mutex_);
  return checkpoint_;
}

HttpResponse Service::handle(std::string_view method, std::string_view path, std::string_view body) const {
  using Handler = json (*)(const LoadedCheckpoint&, const json&);
  Handler post = nullptr;
  if (path == "/encode") post = handle_encode;
  if (path == "/decode") post = handle_decode;
  if (path == "/fade") post = handle_fade;
  if (path == "/transfer") post = handle_transfer;
  const bool info = path == "/model/info";
  if (post == nullptr && !info) return error_response(404, "NotFound", std::string(path));
  if ((info && method != "GET") || (post != nullptr && method != "POST")) {
    return error_response(405, "MethodNotAllowed", std::string(method) + " " + std::string(path));
  }
  const auto ckpt = checkpoint();
  if (!ckpt) return error_response(409, "NoCheckpoint", "no checkpoint loaded");
  try {
    if (info) return {200, model_info(*ckpt)};
    return {200, post(*ckpt, parse_body(body))};
  } catch (const BadRequest& e) {
    return error_response(400, "MalformedRequest", e.detail);
  } catch (const Error& e) {
    return error_response(422, e.name(), e.detail());
  } catch (const json::exception& e) {
    return error_response(400, "MalformedRequest", e.what());
  }
}

int Service::bind(const std::string& host, int port) {
  http_ = std::make_unique<Http>();
  auto& srv = http_->server;
  const std::string origin = options_.cors_origin;
  srv.set_default_headers({{"Access-Control-Allow-Origin", origin}, {"Vary", "Origin"}});
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  srv.Get(".*", route);
  srv.Post(".*", route);
  srv.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  if (port == 0) return srv.bind_to_any_port(host);
  return srv.bind_to_port(host, port) ? port : -1;
}

bool Service::serve_bound() { return http_ && http_->server.listen_after_bind(); }

bool Service::listen(const std::string& host, int port) { return bind(host, port) >= 0 && serve_bound(); }

void Service::stop() {
  if (http_) http_->server.stop();
}

void Service::wait_until_ready() const {
  if (http_) http_->server.wait_until_ready();
}

}  // namespace faders
