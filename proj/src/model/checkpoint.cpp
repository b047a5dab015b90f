// SPDX-License-Identifier: Apache-2.0
#include "faders/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>

#include "faders/diff/rng.hpp"
#include "faders/error.hpp"
#include "faders/service/io.hpp"

namespace faders {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "blob layout assumes a little-endian host");

json ranges_json(const std::vector<ZRange>& ranges) {
  json out = json::array();
  for (const auto& r : ranges) out.push_back({{"min", r.min}, {"max", r.max}});
  return out;
}

char hex_digit(unsigned v) { return static_cast<char>(v < 10 ? '0' + v : 'a' + (v - 10)); }

}  // namespace

std::string tensor_blob(const FaderNet<float>& model) {
  std::string blob;
  for (const auto& p : model.params().all()) {
    const auto* bytes = reinterpret_cast<const char*>(p.value.data.data());
    blob.append(bytes, p.value.data.size() * sizeof(float));
  }
  return blob;
}

std::string checkpoint_id(const FaderNet<float>& model) {
  const std::string header = to_json(model.config()).dump() + ranges_json(model.z_ranges()).dump();
  std::uint64_t h = diff::fnv1a64(header);
  h = diff::fnv1a64(tensor_blob(model), h);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex_digit(static_cast<unsigned>(h & 0xF));
    h >>= 4;
  }
  return out;
}

json checkpoint_manifest(const FaderNet<float>& model) {
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& p : model.params().all()) {
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape}, {"offset", offset}});
    offset += p.value.data.size() * sizeof(float);
  }
  json priors = json::array();
  if (model.config().has_mixture_prior()) {
    for (std::size_t i = 0; i < model.latent_count(); ++i) priors.push_back(model.prior_means(i));
  }
  return {
      {"schema_version", kCheckpointSchemaVersion},
      {"id", checkpoint_id(model)},
      {"config", to_json(model.config())},
      {"tensors", tensors},
      {"blob", "tensors.bin"},
      {"blob_bytes", offset},
      {"z_ranges", ranges_json(model.z_ranges())},
      {"prior_means", priors},
  };
}

std::string save_checkpoint(const FaderNet<float>& model, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
  const json manifest = checkpoint_manifest(model);
  write_file_atomic(dir + "/tensors.bin", tensor_blob(model));
  write_file_atomic(dir + "/manifest.json", manifest.dump(2) + "\n");
  return manifest.at("id").get<std::string>();
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir + "/manifest.json"));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, dir + "/manifest.json: " + e.what());
  }
  try {
    if (manifest.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
      throw Error(ErrorCode::ParseError, "unsupported checkpoint schema");
    }
    const ModelConfig config = config_from_json(manifest.at("config"));
    const std::string blob = read_file(dir + "/" + manifest.at("blob").get<std::string>());
    FaderNet<float> model(config, 0);
    auto& params = model.params().all();
    const auto& index = manifest.at("tensors");
    if (index.size() != params.size()) {
      throw Error(ErrorCode::ShapeError, "checkpoint has " + std::to_string(index.size()) + " tensors, model " +
                                             std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      const auto& entry = index[i];
      if (entry.at("name").get<std::string>() != p.name ||
          entry.at("shape").get<std::vector<std::size_t>>() != p.value.shape) {
        throw Error(ErrorCode::ShapeError, "tensor " + std::to_string(i) + " does not match " + p.name);
      }
      const auto offset = entry.at("offset").get<std::size_t>();
      const std::size_t bytes = p.value.data.size() * sizeof(float);
      if (offset + bytes > blob.size()) throw Error(ErrorCode::ShapeError, "blob too short for " + p.name);
      std::memcpy(p.value.data.data(), blob.data() + offset, bytes);
    }
    std::vector<ZRange> ranges;
    for (const auto& r : manifest.at("z_ranges")) ranges.push_back({r.at("min").get<double>(), r.at("max").get<double>()});
    model.set_z_ranges(std::move(ranges));
    std::string id = checkpoint_id(model);
    if (id != manifest.at("id").get<std::string>()) throw Error(ErrorCode::ParseError, "checkpoint id mismatch");
    return {std::move(model), std::move(id), std::move(manifest)};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, dir + "/manifest.json: " + e.what());
  }
}

}  // namespace faders
