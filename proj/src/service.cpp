#include "geoanim/service.hpp"

#include <charconv>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "geoanim/codec.hpp"
#include "geoanim/ids.hpp"
#include "geoanim/timeline.hpp"

namespace geoanim::service {
namespace {

using codec::json;

constexpr std::size_t kPreparedCacheSize = 16;

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const auto j = path.find('/', i);
    if (i < path.size()) parts.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
    if (j == std::string::npos) break;
    i = j;
  }
  return parts;
}

Response json_response(int status, const json& body) { return {status, codec::dump(body), "application/json"}; }

Response error_response(const ApiError& e) { return json_response(e.http_status(), e.to_json()); }

json parse_body(const Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
  }
}

std::uint64_t parse_revision(const json& value) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return value.get<std::uint64_t>();
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    std::uint64_t r = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), r);
    if (ec == std::errc() && ptr == s.data() + s.size()) return r;
  }
  throw ValidationError("revision must be a non-negative integer");
}

std::uint64_t require_revision(const json& body, const Request& req) {
  if (body.contains("revision")) return parse_revision(body["revision"]);
  if (auto it = req.query.find("revision"); it != req.query.end()) return parse_revision(json(it->second));
  throw ValidationError("revision is required for changes (send the last revision you saw)");
}

double parse_number(const std::string& text, const char* name) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ValidationError(std::string(name) + " must be a number", {{name, text}});
  }
  return v;
}

const std::string& query_param(const Request& req, const char* name) {
  auto it = req.query.find(name);
  if (it == req.query.end()) throw ValidationError(std::string("query parameter '") + name + "' is required");
  return it->second;
}

std::string sniff_type(const std::string& bytes) {
  if (bytes.rfind("\x89PNG", 0) == 0) return "image/png";
  if (bytes.rfind("\xFF\xD8\xFF", 0) == 0) return "image/jpeg";
  if (bytes.rfind("GIF8", 0) == 0) return "image/gif";
  if (bytes.find("<svg") != std::string::npos) return "image/svg+xml";
  return "application/octet-stream";
}

json stored_json(const StoredProject& s) { return {{"project", codec::to_json(s.project)}, {"revision", s.revision}}; }

json sessions_json(const Project& p) {
  json out = json::object();
  for (const auto& [id, s] : p.sessions) out[id] = codec::to_json(s);
  return out;
}

}  // namespace

const char* to_string(ApiCode code) {
  switch (code) {
    case ApiCode::not_found: return "not_found";
    case ApiCode::invalid_input: return "invalid_input";
    case ApiCode::agent_failed: return "agent_failed";
    case ApiCode::geocode_failed: return "geocode_failed";
    case ApiCode::conflict: return "conflict";
    case ApiCode::internal: return "internal";
  }
  return "internal";
}

int ApiError::http_status() const {
  switch (code) {
    case ApiCode::not_found: return 404;
    case ApiCode::invalid_input: return 400;
    case ApiCode::agent_failed: return 502;
    case ApiCode::geocode_failed: return 502;
    case ApiCode::conflict: return 409;
    case ApiCode::internal: return 500;
  }
  return 500;
}

json ApiError::to_json() const { return {{"code", service::to_string(code)}, {"message", message}, {"detail", detail}}; }

ApiError api_error(const Error& e) {
  json detail = e.detail();
  detail["kind"] = geoanim::to_string(e.kind());
  const bool geocoder = e.detail().is_object() && e.detail().value("service", "") == "geocoder";
  ApiCode code = ApiCode::internal;
  switch (e.kind()) {
    case ErrorKind::not_found:
      code = ApiCode::not_found;
      break;
    case ErrorKind::conflict:
      code = ApiCode::conflict;
      break;
    case ErrorKind::invalid_geometry:
    case ErrorKind::empty_input:
    case ErrorKind::antimeridian:
    case ErrorKind::invariant:
    case ErrorKind::precondition:
    case ErrorKind::parse:
    case ErrorKind::unsupported_geometry:
    case ErrorKind::compile_blocked:
    case ErrorKind::validation:
      code = geocoder ? ApiCode::geocode_failed : ApiCode::invalid_input;
      break;
    case ErrorKind::action_failed:
      code = ApiCode::geocode_failed;
      break;
    case ErrorKind::network:
    case ErrorKind::provider:
    case ErrorKind::fixture_missing:
    case ErrorKind::schema_violation:
    case ErrorKind::missing_tool_call:
    case ErrorKind::breakdown_failed:
      code = geocoder ? ApiCode::geocode_failed : ApiCode::agent_failed;
      break;
    case ErrorKind::contract:
    case ErrorKind::io:
      code = ApiCode::internal;
      break;
  }
  return {code, e.what(), detail};
}

Service::Service(std::shared_ptr<ProjectStore> store, Runtime runtime, sequencer::Options frames)
    : store_(std::move(store)), runtime_(std::move(runtime)), frames_(std::move(frames)) {}

Response Service::handle(const Request& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    return error_response(api_error(e));
  } catch (const json::exception& e) {
    return error_response({ApiCode::invalid_input, e.what(), json::object()});
  } catch (const std::exception& e) {
    return error_response({ApiCode::internal, e.what(), json::object()});
  }
}

std::string Service::create_id(const std::string& script) {
  if (runtime_.mode != llm::Mode::replay) return new_ulid();
  // Deterministic in replay: first free id derived from the script.
  const auto seed = "project:" + sha256_hex(script);
  for (std::uint64_t n = 0;; ++n) {
    auto id = derived_id(seed, n);
    if (!store_->exists(id)) return id;
  }
}

std::shared_ptr<const sequencer::PreparedTimeline> Service::prepared(const std::string& id) {
  auto stored = store_->load(id);
  const auto key = id + "@" + std::to_string(stored.revision);
  {
    std::lock_guard guard(cache_mutex_);
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
      if (it->first == key) {
        cache_.splice(cache_.begin(), cache_, it);
        return it->second;
      }
    }
  }
  auto fresh = std::make_shared<const sequencer::PreparedTimeline>(std::move(stored.project.timeline), frames_);
  std::lock_guard guard(cache_mutex_);
  cache_.emplace_front(key, fresh);
  if (cache_.size() > kPreparedCacheSize) cache_.pop_back();
  return fresh;
}

Response Service::route(const Request& req) {
  const auto parts = split_path(req.path);
  const auto& m = req.method;
  auto not_allowed = [&] {
    ApiError e{ApiCode::invalid_input, "method " + m + " is not allowed on " + req.path, {{"method", m}}};
    return json_response(405, e.to_json());
  };
  if (parts.size() == 1 && parts[0] == "healthz") {
    return m == "GET" ? json_response(200, {{"status", "ok"}, {"mode", llm::to_string(runtime_.mode)}}) : not_allowed();
  }
  if (!parts.empty() && parts[0] == "assets") {
    if (parts.size() == 1 && m == "POST") return json_response(201, {{"id", store_->put_asset(req.body)}});
    if (parts.size() == 2 && m == "GET") {
      auto bytes = store_->get_asset(parts[1]);
      auto type = sniff_type(bytes);
      return {200, std::move(bytes), type};
    }
    return parts.size() <= 2 ? not_allowed() : error_response({ApiCode::not_found, "no route " + req.path, json::object()});
  }
  if (parts.empty() || parts[0] != "projects" || parts.size() > 5) {
    return error_response({ApiCode::not_found, "no route " + req.path, json::object()});
  }

  if (parts.size() == 1) {
    if (m == "GET") return json_response(200, {{"projects", store_->list()}});
    if (m != "POST") return not_allowed();
    const auto body = parse_body(req);
    if (!body.contains("script") || !body["script"].is_string()) throw ValidationError("'script' is required");
    const auto script = body["script"].get<std::string>();
    std::string id = body.value("id", "");
    if (!id.empty()) validate_store_id(id);
    auto project = new_project(script, id.empty() ? create_id(script) : id, runtime_.clock);
    if (body.contains("map_style")) {
      auto style = parse_map_style(body["map_style"].get<std::string>());
      if (!style) throw ValidationError("unknown map_style");
      project.timeline.map_style = *style;
    }
    return json_response(201, stored_json(store_->create(project)));
  }

  const std::string& id = parts[1];
  validate_store_id(id);
  const std::string action = parts.size() >= 3 ? parts[2] : "";

  if (parts.size() == 2) {
    if (m == "GET") return json_response(200, stored_json(store_->load(id)));
    if (m == "DELETE") {
      store_->remove(id, require_revision(parse_body(req), req));
      return json_response(200, {{"deleted", id}});
    }
    return not_allowed();
  }

  if (parts.size() == 3 && action == "breakdown") {
    if (m != "POST") return not_allowed();
    const auto body = parse_body(req);
    const auto options = breakdown_options_from_json(body.value("options", json()));
    auto s = store_->update(id, require_revision(body, req), [&](Project& p) { run_breakdown(p, runtime_, options); });
    return json_response(200, {{"breakdown", codec::to_json(s.project.breakdown)}, {"revision", s.revision}});
  }
  if (parts.size() == 4 && action == "breakdown" && parts[3] == "regenerate") {
    if (m != "POST") return not_allowed();
    const auto body = parse_body(req);
    std::vector<ItemEdit> edits;
    for (const auto& e : body.value("edits", json::array())) edits.push_back(item_edit_from_json(e));
    auto s = store_->update(id, require_revision(body, req), [&](Project& p) { run_regenerate(p, runtime_, edits); });
    return json_response(200, {{"breakdown", codec::to_json(s.project.breakdown)}, {"revision", s.revision}});
  }
  if (parts.size() == 3 && action == "research") {
    if (m != "POST") return not_allowed();
    const auto body = parse_body(req);
    const bool force = body.value("force", false);
    std::map<std::string, std::string> failures;
    auto s = store_->update(id, require_revision(body, req), [&](Project& p) { failures = run_research(p, runtime_, force); });
    json result{{"breakdown", codec::to_json(s.project.breakdown)},
                {"sessions", sessions_json(s.project)},
                {"failures", failures},
                {"revision", s.revision}};
    if (!failures.empty()) {
      return error_response({ApiCode::agent_failed,
                             std::to_string(failures.size()) + " item(s) could not be resolved; see their sessions",
                             result});
    }
    return json_response(200, result);
  }
  if (parts.size() == 5 && action == "blocks" && parts[4] == "chat") {
    if (m != "POST") return not_allowed();
    const auto body = parse_body(req);
    if (!body.contains("message") || !body["message"].is_string()) throw ValidationError("'message' is required");
    const auto message = body["message"].get<std::string>();
    const auto& bid = parts[3];
    ChatOutcome out;
    auto s = store_->update(id, require_revision(body, req), [&](Project& p) { out = run_chat(p, runtime_, bid, message); });
    return json_response(200, {{"reply", out.reply},
                               {"updated", out.updated},
                               {"session", codec::to_json(out.session)},
                               {"item", codec::to_json(out.item)},
                               {"revision", s.revision}});
  }
  if (parts.size() == 3 && action == "compile") {
    if (m != "POST") return not_allowed();
    const auto body = parse_body(req);
    const auto options = breakdown_options_from_json(body.value("options", json()));
    auto s = store_->update(id, require_revision(body, req), [&](Project& p) {
      run_compile(p, options);
      p.modified_ms = runtime_.clock();
    });
    return json_response(200, {{"timeline", codec::to_json(s.project.timeline)},
                               {"report", codec::to_json(validate_timeline(s.project.timeline))},
                               {"revision", s.revision}});
  }
  if (parts.size() == 3 && action == "timeline") {
    if (m == "GET") return json_response(200, codec::to_json(store_->load(id).project.timeline));
    if (m != "PUT") return not_allowed();
    const auto body = parse_body(req);
    if (!body.contains("edit")) throw ValidationError("'edit' is required");
    const auto edit = codec::edit_from_json(body["edit"]);
    auto s = store_->update(id, require_revision(body, req), [&](Project& p) {
      p.timeline = apply_edit(p.timeline, edit);
      p.modified_ms = runtime_.clock();
    });
    return json_response(200, {{"timeline", codec::to_json(s.project.timeline)},
                               {"report", codec::to_json(validate_timeline(s.project.timeline))},
                               {"revision", s.revision}});
  }
  if (parts.size() == 3 && action == "frame") {
    if (m != "GET") return not_allowed();
    const double t = parse_number(query_param(req, "t"), "t");
    if (t < 0) throw ValidationError("t must be non-negative");
    return {200, codec::dump(sequencer::to_json(prepared(id)->evaluate(t))), "application/json"};
  }
  if (parts.size() == 3 && action == "frames") {
    if (m != "GET") return not_allowed();
    const double fps = parse_number(query_param(req, "fps"), "fps");
    if (fps < 1 || fps != std::floor(fps) || fps > 240) throw ValidationError("fps must be an integer from 1 to 240");
    const auto prep = prepared(id);
    std::string out;
    for (double t : sequencer::frame_times(prep->timeline().duration(), static_cast<int>(fps))) {
      out += codec::dump(sequencer::to_json(prep->evaluate(t)));
      out += '\n';
    }
    return {200, std::move(out), "application/x-ndjson"};
  }
  if (parts.size() == 3 && action == "export") {
    if (m != "GET") return not_allowed();
    return {200, codec::serialize(store_->load(id).project), "application/json"};
  }
  return error_response({ApiCode::not_found, "no route " + req.path, json::object()});
}

// --- Configuration --------------------------------------------------------------

std::pair<std::string, int> parse_bind_addr(const std::string& text) {
  const auto colon = text.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : (colon == 0 ? "127.0.0.1" : text.substr(0, colon));
  const std::string port_text = colon == std::string::npos ? text : text.substr(colon + 1);
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw ValidationError("BIND_ADDR must look like host:port", {{"value", text}});
  }
  return {host, port};
}

ServerConfig ServerConfig::from_env() {
  ServerConfig c;
  c.data_dir = env_or("DATA_DIR", c.data_dir.string());
  if (auto bind = env("BIND_ADDR")) std::tie(c.host, c.port) = parse_bind_addr(*bind);
  return c;
}

// --- HTTP adapter ---------------------------------------------------------------

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;
  explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& in, httplib::Response& out) {
    Request req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query.emplace(k, v);
    req.body = in.body;
    auto resp = impl_->service.handle(req);
    out.status = resp.status;
    out.set_content(std::move(resp.body), resp.content_type);
  };
  const std::string any = R"(/.*)";
  impl_->server.Get(any, handler);
  impl_->server.Post(any, handler);
  impl_->server.Put(any, handler);
  impl_->server.Delete(any, handler);
  impl_->server.Patch(any, handler);
  impl_->server.set_payload_max_length(64u << 20);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace geoanim::service
