#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "lgi/bundle.hpp"
#include "lgi/thinking.hpp"

namespace httplib {
class Server;
}

namespace lgi::gateway {

struct GatewayConfig {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  std::chrono::seconds session_ttl{900};
};

using SessionFactory = std::function<std::unique_ptr<thinking::Session>(const thinking::SessionOptions&)>;

/// HTTP/1.1 JSON service over thinking-loop sessions:
///   GET  /healthz                   200 once a model is loaded, 503 before
///   POST /sessions                  {mode, seed?} -> 201 {id, mode}
///   POST /sessions/{id}/command     {text} -> {completion, image[784], latents_dim}
///   GET  /sessions/{id}             state summary with the transcript
///   GET  /sessions/{id}/frame.pgm   imagined image as binary PGM
/// Commands within one session never interleave (409 while one is running);
/// distinct sessions run concurrently. Idle sessions expire after the TTL.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Makes the service ready; sessions are created through `factory`.
  void set_factory(SessionFactory factory, std::size_t v3_dim, std::size_t v4_dim);
  /// Serves the models of a trained bundle (all three must be present).
  void load_models(ModelBundle bundle);
  bool ready() const;

  /// Binds the listening socket. Returns false when the address is unavailable.
  bool bind();
  int port() const noexcept { return port_; }
  /// Serves on the calling thread until stop().
  void serve();
  /// bind() + serve() on a background thread.
  bool start();
  void stop();

  std::size_t session_count() const;
  /// Drops sessions idle for longer than the TTL; returns how many.
  std::size_t evict_idle();

 private:
  struct Record;

  void install_routes();
  std::shared_ptr<Record> find(const std::string& id);
  std::string new_id();

  GatewayConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread worker_;
  int port_ = 0;

  mutable std::mutex mutex_;
  SessionFactory factory_;
  std::shared_ptr<const ModelBundle> models_;
  std::size_t v3_dim_ = 0;
  std::size_t v4_dim_ = 0;
  std::map<std::string, std::shared_ptr<Record>> sessions_;
  Rng id_rng_;
};

}  // namespace lgi::gateway
