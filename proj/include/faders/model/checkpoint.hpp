// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint directory layout:
//   manifest.json  config, tensor index {name, shape, offset}, z^d ranges,
//                  prior-mean summary, checkpoint id
//   tensors.bin    little-endian float32, row-major, in index order
#pragma once

#include <string>

#include "faders/model/fadernet.hpp"
#include "json.hpp"

namespace faders {

inline constexpr int kCheckpointSchemaVersion = 1;

struct LoadedCheckpoint {
  FaderNet<float> model;
  std::string id;
  nlohmann::json manifest;
};

// Blob bytes in index order.
std::string tensor_blob(const FaderNet<float>& model);
// Hash over the config, z ranges and tensor bytes; 16 hex digits.
std::string checkpoint_id(const FaderNet<float>& model);
nlohmann::json checkpoint_manifest(const FaderNet<float>& model);

// Writes the blob, then the manifest; each file is replaced atomically.
// Returns the checkpoint id.
std::string save_checkpoint(const FaderNet<float>& model, const std::string& dir);
// IoError / ParseError / ShapeError on unreadable or inconsistent input.
LoadedCheckpoint load_checkpoint(const std::string& dir);

}  // namespace faders
