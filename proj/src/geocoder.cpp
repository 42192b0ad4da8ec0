#include "geoanim/geocoder.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <thread>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/geometry.hpp"
#include "geoanim/http.hpp"
#include "geoanim/ids.hpp"

namespace geoanim {
namespace {

using codec::json;

bool unreserved(unsigned char c) {
  return std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~';
}

// application/x-www-form-urlencoded value encoding.
std::string form_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (unreserved(c)) {
      out += static_cast<char>(c);
    } else if (c == ' ') {
      out += '+';
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double area_or_zero(const GeoShape& s) {
  if (!s.is_area()) return 0.0;
  try {
    return geometry::area(s);
  } catch (const Error&) {
    return 0.0;
  }
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void validate_request(const GeocodeRequest& req) {
  if (req.query.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ValidationError("geocode query must not be empty");
  }
  for (const auto& cc : req.country_codes) {
    const bool ok = cc.size() == 2 && std::islower(static_cast<unsigned char>(cc[0])) &&
                    std::islower(static_cast<unsigned char>(cc[1]));
    if (!ok) {
      throw ValidationError("country code must be two lowercase letters: '" + cc + "'", {{"country_code", cc}});
    }
  }
  if (req.viewbox && (!in_range(req.viewbox->min) || !in_range(req.viewbox->max))) {
    throw ValidationError("viewbox coordinates out of range");
  }
}

std::string build_query(const GeocodeRequest& req) {
  validate_request(req);
  std::string q = "q=" + form_encode(req.query) + "&format=geojson";
  if (req.want_polygon) q += "&polygon_geojson=1";
  if (!req.country_codes.empty()) {
    q += "&countrycodes=";
    for (std::size_t i = 0; i < req.country_codes.size(); ++i) {
      if (i) q += ',';
      q += req.country_codes[i];
    }
  }
  if (req.viewbox) {
    const auto& b = *req.viewbox;
    q += "&viewbox=" + shortest(b.min.lon) + "," + shortest(b.min.lat) + "," + shortest(b.max.lon) + "," +
         shortest(b.max.lat);
  }
  if (req.bounded) q += "&bounded=1";
  return q;
}

std::vector<GeocodeResult> parse_results(const std::string& body, std::int64_t fetched_at) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const std::exception& e) {
    throw ParseError(std::string("geocoder response is not JSON: ") + e.what(), {{"raw", body}});
  }
  if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
    throw ParseError("geocoder response is not a FeatureCollection", {{"raw", body}});
  }
  std::vector<GeocodeResult> out;
  std::size_t unsupported = 0;
  for (const auto& f : doc["features"]) {
    try {
      GeocodeResult r;
      const json props = f.value("properties", json::object());
      r.display_name = props.value("display_name", props.value("name", std::string{}));
      const auto imp = props.find("importance");
      if (imp != props.end() && imp->is_number()) r.importance = imp->get<double>();
      r.osm_type = props.value("osm_type", std::string{});
      const auto id = props.find("osm_id");
      if (id != props.end()) r.osm_id = id->is_string() ? id->get<std::string>() : id->dump();
      r.shape = codec::shape_from_geojson_geometry(f.at("geometry"));
      if (auto problems = shape_problems(r.shape); !problems.empty()) {
        throw ParseError("geocoder returned an invalid shape for '" + r.display_name + "': " + problems.front(),
                         {{"raw", body}});
      }
      r.fetched_at = fetched_at;
      out.push_back(std::move(r));
    } catch (const UnsupportedGeometryError&) {
      ++unsupported;
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(std::string("malformed geocoder feature: ") + e.what(), {{"raw", body}});
    }
  }
  if (out.empty() && unsupported > 0) {
    throw UnsupportedGeometryError("geocoder returned only unsupported geometry types");
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GeocodeResult& a, const GeocodeResult& b) { return a.importance > b.importance; });
  return out;
}

const GeocodeResult& select_best(const std::vector<GeocodeResult>& results) {
  if (results.empty()) throw NotFoundError("no geocoding results");
  const GeocodeResult* best = &results.front();
  double best_area = area_or_zero(best->shape);
  for (const auto& r : results) {
    if (&r == best) continue;
    const double a = area_or_zero(r.shape);
    bool better = false;
    if (r.importance != best->importance) {
      better = r.importance > best->importance;
    } else if (a != best_area) {
      better = a > best_area;
    } else {
      better = r.display_name < best->display_name;
    }
    if (better) {
      best = &r;
      best_area = a;
    }
  }
  return *best;
}

// --- Rate gate ----------------------------------------------------------------

RateGate::RateGate(std::chrono::steady_clock::duration interval) : interval_(interval) {}

void RateGate::acquire() {
  // Holding the lock while sleeping serialises waiters in arrival order.
  std::lock_guard lock(mutex_);
  const auto now = std::chrono::steady_clock::now();
  if (now < next_) std::this_thread::sleep_until(next_);
  next_ = std::chrono::steady_clock::now() + interval_;
}

RateGate& RateGate::nominatim() {
  static RateGate gate(std::chrono::seconds(1));
  return gate;
}

// --- Transports ---------------------------------------------------------------

LiveGeocoderTransport::LiveGeocoderTransport(std::string base_url, std::string user_agent, RateGate& gate)
    : base_url_(std::move(base_url)), user_agent_(std::move(user_agent)), gate_(gate) {
  if (user_agent_.empty()) throw ValidationError("geocoder requires a descriptive User-Agent");
}

std::string LiveGeocoderTransport::fetch(const std::string& query) {
  gate_.acquire();
  http::Response resp;
  try {
    resp = http::get(base_url_, "/search?" + query, {{"User-Agent", user_agent_}, {"Accept", "application/json"}});
  } catch (const NetworkError& e) {
    throw NetworkError(e.what(), {{"service", "geocoder"}});
  }
  if (resp.status == 429 || resp.status >= 500) {
    throw NetworkError("geocoder answered HTTP " + std::to_string(resp.status), {{"status", resp.status}, {"service", "geocoder"}});
  }
  if (resp.status != 200) {
    throw ParseError("geocoder answered HTTP " + std::to_string(resp.status),
                     {{"status", resp.status}, {"raw", resp.body}, {"service", "geocoder"}});
  }
  return resp.body;
}

std::filesystem::path geocoder_fixture_path(const std::filesystem::path& dir, const std::string& query) {
  return dir / (sha256_hex(query) + ".json");
}

ReplayGeocoderTransport::ReplayGeocoderTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ReplayGeocoderTransport::fetch(const std::string& query) {
  const auto path = geocoder_fixture_path(dir_, query);
  if (!std::filesystem::exists(path)) {
    throw FixtureMissingError("no geocoder fixture for '" + query + "'",
                              {{"hash", sha256_hex(query)}, {"query", query}, {"path", path.string()}, {"service", "geocoder"}});
  }
  const auto doc = json::parse(read_file(path));
  if (doc.contains("raw")) return doc["raw"].get<std::string>();
  return doc.at("response").dump();
}

RecordingGeocoderTransport::RecordingGeocoderTransport(std::shared_ptr<GeocoderTransport> inner,
                                                       std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

std::string RecordingGeocoderTransport::fetch(const std::string& query) {
  auto body = inner_->fetch(query);
  json doc{{"query", query}};
  try {
    doc["response"] = json::parse(body);
  } catch (const std::exception&) {
    doc["raw"] = body;
  }
  std::filesystem::create_directories(dir_);
  const auto path = geocoder_fixture_path(dir_, query);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("cannot write fixture " + path.string());
  return body;
}

// --- Cache --------------------------------------------------------------------

GeocodeCache::GeocodeCache(std::filesystem::path file, double ttl_hours, Clock clock)
    : file_(std::move(file)), ttl_ms_(static_cast<std::int64_t>(ttl_hours * 3600.0 * 1000.0)), clock_(std::move(clock)) {
  if (file_.empty() || !std::filesystem::exists(file_)) return;
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto rec = json::parse(line);
      entries_[rec.at("key").get<std::string>()] =
          Entry{rec.at("response").get<std::string>(), rec.at("fetched_at").get<std::int64_t>()};
    } catch (const std::exception&) {
      // A torn trailing line from an interrupted append is skipped.
    }
  }
}

std::optional<GeocodeCache::Entry> GeocodeCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  if (clock_() - it->second.fetched_at > ttl_ms_) return std::nullopt;
  return it->second;
}

void GeocodeCache::store(const std::string& key, const std::string& response, std::int64_t fetched_at) {
  std::unique_lock lock(mutex_);
  entries_[key] = Entry{response, fetched_at};
  if (file_.empty()) return;
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  out << json{{"key", key}, {"response", response}, {"fetched_at", fetched_at}}.dump() << '\n';
  out.flush();
  if (!out) throw IoError("cannot append to geocoder cache " + file_.string());
}

// --- Client -------------------------------------------------------------------

GeocoderConfig GeocoderConfig::from_env() {
  GeocoderConfig c;
  c.base_url = env_or("GEOCODER_BASE_URL", c.base_url);
  c.user_agent = env_or("GEOCODER_USER_AGENT", c.user_agent);
  c.cache_ttl_hours = env_number_or("GEOCODER_CACHE_TTL_HOURS", c.cache_ttl_hours);
  return c;
}

Geocoder::Geocoder(std::shared_ptr<GeocoderTransport> transport, std::shared_ptr<GeocodeCache> cache, Clock clock)
    : transport_(std::move(transport)), cache_(std::move(cache)), clock_(std::move(clock)) {}

std::vector<GeocodeResult> Geocoder::geocode(const GeocodeRequest& req) {
  const auto key = build_query(req);
  if (cache_) {
    if (auto hit = cache_->lookup(key)) return parse_results(hit->response, hit->fetched_at);
  }
  const auto body = transport_->fetch(key);
  const auto fetched_at = clock_();
  auto results = parse_results(body, fetched_at);
  if (cache_) cache_->store(key, body, fetched_at);
  return results;
}

GeocodeResult Geocoder::geocode_one(const GeocodeRequest& req) {
  auto results = geocode(req);
  if (results.empty()) throw NotFoundError("no geocoding results for '" + req.query + "'", {{"query", req.query}});
  return select_best(results);
}

}  // namespace geoanim
