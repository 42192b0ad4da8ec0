#pragma once

// HTTP facade over the store and the pipeline. `Service::handle` is a pure
// router over plain request/response values; `HttpServer` binds it to a
// socket.

#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "geoanim/errors.hpp"
#include "geoanim/pipeline.hpp"
#include "geoanim/sequencer.hpp"
#include "geoanim/store.hpp"

namespace geoanim::service {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

enum class ApiCode { not_found, invalid_input, agent_failed, geocode_failed, conflict, internal };
const char* to_string(ApiCode code);

struct ApiError {
  ApiCode code = ApiCode::internal;
  std::string message;
  nlohmann::json detail = nlohmann::json::object();

  int http_status() const;
  nlohmann::json to_json() const;  // {"code", "message", "detail"}
};

/// Engine error -> API error (geocoder-originated failures carry
/// detail.service == "geocoder").
ApiError api_error(const Error& error);

class Service {
 public:
  Service(std::shared_ptr<ProjectStore> store, Runtime runtime, sequencer::Options frames = {});

  /// Never throws; every failure becomes an ApiError body.
  Response handle(const Request& request);

  ProjectStore& store() { return *store_; }
  Runtime& runtime() { return runtime_; }

 private:
  Response route(const Request& request);
  std::string create_id(const std::string& script);
  std::shared_ptr<const sequencer::PreparedTimeline> prepared(const std::string& id);

  std::shared_ptr<ProjectStore> store_;
  Runtime runtime_;
  sequencer::Options frames_;

  // (project id, revision) -> prepared timeline, small LRU.
  std::mutex cache_mutex_;
  std::list<std::pair<std::string, std::shared_ptr<const sequencer::PreparedTimeline>>> cache_;
};

struct ServerConfig {
  std::filesystem::path data_dir = "data";
  std::string host = "127.0.0.1";
  int port = 8080;

  /// DATA_DIR, BIND_ADDR (host:port).
  static ServerConfig from_env();
};

/// "host:port", ":port" or "port".
std::pair<std::string, int> parse_bind_addr(const std::string& text);

class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port; returns the bound port. Throws IoError.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void start();   // listen on a background thread
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace geoanim::service
