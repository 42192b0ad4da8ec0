#include "geoanim/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>

#include "geoanim/errors.hpp"

namespace geoanim::http {
namespace {

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Target split(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("base URL needs a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  Target t;
  t.origin = base_url.substr(0, path_start);
  if (path_start != std::string::npos) t.prefix = base_url.substr(path_start);
  while (!t.prefix.empty() && t.prefix.back() == '/') t.prefix.pop_back();
  return t;
}

httplib::Client make_client(const Target& t, double timeout_seconds) {
  httplib::Client client(t.origin);
  const auto secs = static_cast<time_t>(timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_follow_location(true);
  // Callers pass already-encoded paths; re-encoding would turn "+" into "%2B".
  client.set_url_encode(false);
  return client;
}

Response convert(httplib::Result& result, const std::string& url) {
  if (!result) {
    throw NetworkError("request to " + url + " failed: " + httplib::to_string(result.error()),
                       {{"url", url}});
  }
  Response r;
  r.status = result->status;
  r.body = result->body;
  for (const auto& [k, v] : result->headers) r.headers.emplace(k, v);
  return r;
}

httplib::Headers to_httplib(const Headers& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

}  // namespace

std::string Response::header(const std::string& name) const {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  const auto wanted = lower(name);
  for (const auto& [k, v] : headers)
    if (lower(k) == wanted) return v;
  return {};
}

Response get(const std::string& base_url, const std::string& path, const Headers& headers,
             double timeout_seconds) {
  const auto target = split(base_url);
  auto client = make_client(target, timeout_seconds);
  auto result = client.Get(target.prefix + path, to_httplib(headers));
  return convert(result, base_url + path);
}

Response post(const std::string& base_url, const std::string& path, const std::string& body,
              const std::string& content_type, const Headers& headers, double timeout_seconds) {
  const auto target = split(base_url);
  auto client = make_client(target, timeout_seconds);
  auto result = client.Post(target.prefix + path, to_httplib(headers), body, content_type);
  return convert(result, base_url + path);
}

}  // namespace geoanim::http
