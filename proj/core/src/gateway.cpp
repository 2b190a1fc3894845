#include "lgi/gateway.hpp"

#include <cstdio>
#include <httplib.h>
#include <json.hpp>
#include <random>

namespace lgi::gateway {

using nlohmann::json;

struct Gateway::Record {
  std::string id;
  std::unique_ptr<thinking::Session> session;
  std::chrono::system_clock::time_point created;
  std::chrono::steady_clock::time_point last_used;
  std::int64_t last_used_unix = 0;
  /// Held for the duration of a command; readers wait on it, a second command is refused.
  std::mutex exec;
};

namespace {

std::int64_t unix_seconds(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace

Gateway::Gateway(GatewayConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()),
      id_rng_(std::random_device{}() ^ static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count())) {
  // SO_REUSEADDR only; httplib's default also sets SO_REUSEPORT, which would let
  // a second server silently share a port that is already in use.
  server_->set_socket_options([](int sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  install_routes();
}

Gateway::~Gateway() { stop(); }

void Gateway::set_factory(SessionFactory factory, std::size_t v3_dim, std::size_t v4_dim) {
  std::lock_guard lock(mutex_);
  factory_ = std::move(factory);
  v3_dim_ = v3_dim;
  v4_dim_ = v4_dim;
}

void Gateway::load_models(ModelBundle bundle) {
  if (!bundle.vision || !bundle.ips || !bundle.pfc) throw ContractError("gateway: checkpoint must hold vision, IPS and PFC models");
  auto models = std::make_shared<const ModelBundle>(std::move(bundle));
  const auto v3 = models->vision->config().v3;
  const auto v4 = models->vision->config().v4;
  set_factory([models](const thinking::SessionOptions& options) { return thinking::new_session(*models, options); }, v3,
              v4);
  std::lock_guard lock(mutex_);
  models_ = std::move(models);
}

bool Gateway::ready() const {
  std::lock_guard lock(mutex_);
  return static_cast<bool>(factory_);
}

std::size_t Gateway::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::size_t Gateway::evict_idle() {
  const auto now = std::chrono::steady_clock::now();
  std::lock_guard lock(mutex_);
  std::size_t evicted = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_used > config_.session_ttl) {
      it = sessions_.erase(it);
      ++evicted;
    } else {
      ++it;
    }
  }
  return evicted;
}

std::shared_ptr<Gateway::Record> Gateway::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string Gateway::new_id() {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(id_rng_.next_u64()),
                static_cast<unsigned long long>(id_rng_.next_u64()));
  return buf;
}

void Gateway::install_routes() {
  auto& svr = *server_;
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  svr.set_pre_routing_handler([this](const httplib::Request&, httplib::Response&) {
    evict_idle();
    return httplib::Server::HandlerResponse::Unhandled;
  });
  svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  svr.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    if (ready()) {
      send_json(res, 200, {{"status", "ok"}});
    } else {
      send_json(res, 503, {{"status", "model not loaded"}});
    }
  });

  svr.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    SessionFactory factory;
    {
      std::lock_guard lock(mutex_);
      factory = factory_;
    }
    if (!factory) return send_error(res, 503, "model not loaded");
    json body = json::object();
    if (!req.body.empty()) {
      body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "request body must be a JSON object");
    }
    thinking::SessionOptions options;
    try {
      const json mode = body.value("mode", json("full"));
      if (!mode.is_string()) return send_error(res, 400, "mode must be a string");
      options.mode = pfc::parse_loop_mode(mode.get<std::string>());
      if (body.contains("seed")) {
        if (!body["seed"].is_number_unsigned()) return send_error(res, 400, "seed must be a non-negative integer");
        options.seed = body["seed"].get<std::uint64_t>();
      }
    } catch (const ConfigError& e) {
      return send_error(res, 400, e.what());
    }
    auto record = std::make_shared<Record>();
    try {
      record->session = factory(options);
    } catch (const Error& e) {
      return send_error(res, 503, e.what());
    }
    record->created = std::chrono::system_clock::now();
    record->last_used = std::chrono::steady_clock::now();
    record->last_used_unix = unix_seconds(record->created);
    {
      std::lock_guard lock(mutex_);
      do {
        record->id = new_id();
      } while (sessions_.count(record->id));
      sessions_[record->id] = record;
    }
    send_json(res, 201, {{"id", record->id}, {"mode", pfc::loop_mode_name(options.mode)}, {"seed", options.seed}});
  });

  svr.Post(R"(/sessions/([0-9a-f]+)/command)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto record = find(req.matches[1]);
    if (!record) return send_error(res, 404, "unknown session");
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
      return send_error(res, 400, "request body must be {\"text\": string}");
    }
    std::unique_lock exec(record->exec, std::try_to_lock);
    if (!exec.owns_lock()) return send_error(res, 409, "a command is already running in this session");
    const std::string text = body["text"].get<std::string>();
    thinking::ThoughtResult result;
    try {
      result = record->session->issue(text);
    } catch (const CodecError& e) {
      return send_json(res, 422, {{"error", e.what()}, {"symbol", std::string(1, e.symbol())}, {"position", e.position()}});
    } catch (const GrammarError& e) {
      return send_error(res, 400, e.what());
    } catch (const thinking::SessionBusy& e) {
      return send_error(res, 409, e.what());
    } catch (const Error& e) {
      return send_error(res, 500, e.what());
    }
    {
      std::lock_guard lock(mutex_);
      record->last_used = std::chrono::steady_clock::now();
      record->last_used_unix = unix_seconds(std::chrono::system_clock::now());
    }
    json image = json::array();
    for (float v : result.image_after.pixels) image.push_back(v);
    send_json(res, 200,
              {{"completion", result.completion},
               {"image", std::move(image)},
               {"latents_dim", {{"v3", result.latents.v3.size()}, {"v4", result.latents.v4.size()}}},
               {"transcript_length", record->session->transcript().size()}});
  });

  svr.Get(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto record = find(req.matches[1]);
    if (!record) return send_error(res, 404, "unknown session");
    std::lock_guard exec(record->exec);
    const auto& session = *record->session;
    json transcript = json::array();
    for (const auto& r : session.transcript()) {
      transcript.push_back({{"index", r.index}, {"command", r.command}, {"completion", r.completion}});
    }
    std::int64_t last_used = 0;
    {
      std::lock_guard lock(mutex_);
      last_used = record->last_used_unix;
    }
    send_json(res, 200,
              {{"id", record->id},
               {"mode", pfc::loop_mode_name(session.mode())},
               {"seed", session.options().seed},
               {"created", unix_seconds(record->created)},
               {"last_used", last_used},
               {"transcript_length", transcript.size()},
               {"transcript", std::move(transcript)}});
  });

  svr.Get(R"(/sessions/([0-9a-f]+)/frame\.pgm)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto record = find(req.matches[1]);
    if (!record) return send_error(res, 404, "unknown session");
    std::lock_guard exec(record->exec);
    res.set_content(encode_pgm(record->session->image()), "image/x-portable-graymap");
  });
}

bool Gateway::bind() {
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
    return port_ > 0;
  }
  if (!server_->bind_to_port(config_.host, config_.port)) return false;
  port_ = config_.port;
  return true;
}

void Gateway::serve() { server_->listen_after_bind(); }

bool Gateway::start() {
  if (!bind()) return false;
  worker_ = std::thread([this] { serve(); });
  server_->wait_until_ready();
  return true;
}

void Gateway::stop() {
  if (server_) server_->stop();
  if (worker_.joinable()) worker_.join();
}

}  // namespace lgi::gateway
