#pragma once

// Nominatim-compatible forward geocoding with a persistent TTL cache, a
// process-wide rate gate and swappable transports (live, record, replay).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "geoanim/model.hpp"
#include "geoanim/runtime.hpp"

namespace geoanim {

struct GeocodeResult {
  std::string display_name;
  GeoShape shape;
  double importance = 0.0;
  std::string osm_type;
  std::string osm_id;
  std::int64_t fetched_at = 0;  // Unix ms
  friend bool operator==(const GeocodeResult&, const GeocodeResult&) = default;
};

/// Throws ValidationError for an empty query or malformed country codes.
void validate_request(const GeocodeRequest& req);

/// Percent-encoded parameter string in fixed order: q, format,
/// polygon_geojson, countrycodes, viewbox, bounded.
std::string build_query(const GeocodeRequest& req);

/// Parses a format=geojson FeatureCollection. Features with unsupported
/// geometry are skipped; a malformed body raises ParseError carrying it.
/// Results come back sorted by importance, highest first.
std::vector<GeocodeResult> parse_results(const std::string& body, std::int64_t fetched_at);

/// Highest importance, then larger polygon area, then display_name.
/// Throws NotFoundError on an empty list.
const GeocodeResult& select_best(const std::vector<GeocodeResult>& results);

// --- Transports -------------------------------------------------------------

class GeocoderTransport {
 public:
  virtual ~GeocoderTransport() = default;
  /// Raw response body for a build_query string.
  virtual std::string fetch(const std::string& query) = 0;
};

/// Global token gate: callers leave acquire() at least `interval` apart.
class RateGate {
 public:
  explicit RateGate(std::chrono::steady_clock::duration interval);
  void acquire();
  /// Shared gate used by every live geocoder in the process (1 request/s).
  static RateGate& nominatim();

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_{};
};

class LiveGeocoderTransport : public GeocoderTransport {
 public:
  LiveGeocoderTransport(std::string base_url, std::string user_agent, RateGate& gate = RateGate::nominatim());
  std::string fetch(const std::string& query) override;

 private:
  std::string base_url_;
  std::string user_agent_;
  RateGate& gate_;
};

/// Fixture file for a query: <dir>/<sha256(query)>.json
std::filesystem::path geocoder_fixture_path(const std::filesystem::path& dir, const std::string& query);

/// Serves recorded responses; a miss raises FixtureMissingError.
class ReplayGeocoderTransport : public GeocoderTransport {
 public:
  explicit ReplayGeocoderTransport(std::filesystem::path dir);
  std::string fetch(const std::string& query) override;

 private:
  std::filesystem::path dir_;
};

/// Forwards to another transport and writes each response as a fixture.
class RecordingGeocoderTransport : public GeocoderTransport {
 public:
  RecordingGeocoderTransport(std::shared_ptr<GeocoderTransport> inner, std::filesystem::path dir);
  std::string fetch(const std::string& query) override;

 private:
  std::shared_ptr<GeocoderTransport> inner_;
  std::filesystem::path dir_;
};

// --- Cache ------------------------------------------------------------------

/// Append-only JSON-lines file of {key, response, fetched_at}; the newest
/// record per key wins and entries older than the TTL are ignored.
class GeocodeCache {
 public:
  struct Entry {
    std::string response;
    std::int64_t fetched_at = 0;
  };

  /// An empty path keeps the cache in memory only.
  GeocodeCache(std::filesystem::path file, double ttl_hours = 24.0, Clock clock = system_clock());

  std::optional<Entry> lookup(const std::string& key) const;
  void store(const std::string& key, const std::string& response, std::int64_t fetched_at);

 private:
  std::filesystem::path file_;
  std::int64_t ttl_ms_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> entries_;
};

// --- Client -----------------------------------------------------------------

struct GeocoderConfig {
  std::string base_url = "https://nominatim.openstreetmap.org";
  std::string user_agent = "geoanim/0.1 (map animation authoring)";
  double cache_ttl_hours = 24.0;

  /// GEOCODER_BASE_URL, GEOCODER_USER_AGENT, GEOCODER_CACHE_TTL_HOURS.
  static GeocoderConfig from_env();
};

class Geocoder {
 public:
  Geocoder(std::shared_ptr<GeocoderTransport> transport, std::shared_ptr<GeocodeCache> cache = nullptr,
           Clock clock = system_clock());

  std::vector<GeocodeResult> geocode(const GeocodeRequest& req);
  /// geocode + select_best; NotFoundError names the query when nothing matched.
  GeocodeResult geocode_one(const GeocodeRequest& req);

 private:
  std::shared_ptr<GeocoderTransport> transport_;
  std::shared_ptr<GeocodeCache> cache_;
  Clock clock_;
};

}  // namespace geoanim
