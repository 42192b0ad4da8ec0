#pragma once

// Thin blocking HTTP client used by the geocoder and the LLM gateway. The
// base URL may carry a path prefix ("https://host/v1"); request paths are
// appended to it.

#include <map>
#include <string>

namespace geoanim::http {

using Headers = std::multimap<std::string, std::string>;

struct Response {
  int status = 0;
  std::string body;
  Headers headers;

  std::string header(const std::string& name) const;
};

/// Throws NetworkError when no response arrives (DNS, connect, timeout).
Response get(const std::string& base_url, const std::string& path, const Headers& headers,
             double timeout_seconds = 30.0);
Response post(const std::string& base_url, const std::string& path, const std::string& body,
              const std::string& content_type, const Headers& headers, double timeout_seconds = 120.0);

}  // namespace geoanim::http
