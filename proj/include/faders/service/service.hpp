// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "faders/model/checkpoint.hpp"
#include "json.hpp"

namespace faders {

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  std::string cors_origin = "http://localhost:5173";
};

// JSON endpoints over one loaded checkpoint:
//   POST /encode, /decode, /fade, /transfer; GET /model/info
// 400 malformed body, 409 no checkpoint, 422 domain error.
// Handlers take a snapshot of the current model, so a hot swap never
// changes the model under an in-flight request.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();

  void load(const std::string& checkpoint_dir);
  void set_checkpoint(std::shared_ptr<const LoadedCheckpoint> checkpoint);
  std::shared_ptr<const LoadedCheckpoint> checkpoint() const;

  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  // Blocking HTTP/1.1 listener; returns after stop(). port 0 picks a free port.
  bool listen(const std::string& host, int port);
  // Binds first so the caller can learn the port before serving.
  int bind(const std::string& host, int port);
  bool serve_bound();
  void stop();
  void wait_until_ready() const;

  const ServiceOptions& options() const { return options_; }

 private:
  struct Http;

  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::shared_ptr<const LoadedCheckpoint> checkpoint_;
  std::unique_ptr<Http> http_;
};

// fader in [0, 1] -> z^d, and the clamped inverse.
double fader_to_z(double fader, const ZRange& range);
double z_to_fader(double z, const ZRange& range);

}  // namespace faders
