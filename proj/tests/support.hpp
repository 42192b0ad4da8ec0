#pragma once

// Shared fixtures and independent oracles for the C++ suites. Nothing here
// calls into the geometry implementation it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "geoanim/model.hpp"

namespace geoanim::testing {

inline constexpr double kRadiusKm = 6371.0088;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

inline Ring rect_ring(double lon0, double lat0, double lon1, double lat1) {
  return {{lat0, lon0}, {lat0, lon1}, {lat1, lon1}, {lat1, lon0}, {lat0, lon0}};
}

inline GeoShape rect(double lon0, double lat0, double lon1, double lat1) {
  return GeoShape::make_polygon(rect_ring(lon0, lat0, lon1, lat1));
}

/// Star-shaped polygon around (lat, lon): one jittered vertex angle per
/// equal sector (so no gap reaches pi), radii in [rmin, rmax] degrees.
inline GeoShape random_star(std::mt19937_64& rng, double lat, double lon, double rmin, double rmax, int max_vertices = 12) {
  std::uniform_int_distribution<int> count(3, max_vertices);
  std::uniform_real_distribution<double> jitter(0.0, 0.8);
  std::uniform_real_distribution<double> radius(rmin, rmax);
  const int n = count(rng);
  Ring ring;
  for (int k = 0; k < n; ++k) {
    const double a = 2 * std::numbers::pi * (k + jitter(rng)) / n;
    const double r = radius(rng);
    ring.push_back({lat + r * std::sin(a), lon + r * std::cos(a)});
  }
  ring.push_back(ring.front());
  return GeoShape::make_polygon(std::move(ring));
}

// --- Independent oracles ------------------------------------------------------

inline bool oracle_ring_contains(const Ring& ring, double lat, double lon) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const double yi = ring[i].lat, yj = ring[j].lat, xi = ring[i].lon, xj = ring[j].lon;
    if (((yi > lat) != (yj > lat)) && (lon < (xj - xi) * (lat - yi) / (yj - yi) + xi)) inside = !inside;
  }
  return inside;
}

inline bool oracle_contains(const GeoShape& shape, double lat, double lon) {
  for (const auto& poly : shape.polygons) {
    if (poly.empty() || !oracle_ring_contains(poly.front(), lat, lon)) continue;
    bool hole = false;
    for (std::size_t i = 1; i < poly.size(); ++i) hole = hole || oracle_ring_contains(poly[i], lat, lon);
    if (!hole) return true;
  }
  return false;
}

/// Spherical area of a lat/lon box, km^2.
inline double spherical_box_area(double lat0, double lat1, double lon0, double lon1) {
  return kRadiusKm * kRadiusKm * (std::sin(lat1 * kDegToRad) - std::sin(lat0 * kDegToRad)) *
         ((lon1 - lon0) * kDegToRad);
}

struct Box {
  double lat0, lat1, lon0, lon1;
};

inline Box box_of(const std::vector<const GeoShape*>& shapes) {
  Box b{90, -90, 180, -180};
  for (auto* s : shapes)
    for (const auto& poly : s->polygons)
      for (const auto& ring : poly)
        for (const auto& p : ring) {
          b.lat0 = std::min(b.lat0, p.lat);
          b.lat1 = std::max(b.lat1, p.lat);
          b.lon0 = std::min(b.lon0, p.lon);
          b.lon1 = std::max(b.lon1, p.lon);
        }
  return b;
}

/// Jittered-grid Monte Carlo over a lat/lon box with spherical cell weights.
/// `fn(lat, lon, weight_km2)` is called once per sample.
template <class Fn>
void monte_carlo(const Box& box, int per_axis, std::uint64_t seed, Fn&& fn) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double dlat = (box.lat1 - box.lat0) / per_axis;
  const double dlon = (box.lon1 - box.lon0) / per_axis;
  for (int i = 0; i < per_axis; ++i) {
    const double row_lat0 = box.lat0 + i * dlat;
    const double w = spherical_box_area(row_lat0, row_lat0 + dlat, 0.0, dlon);
    for (int j = 0; j < per_axis; ++j) {
      const double lat = row_lat0 + u(rng) * dlat;
      const double lon = box.lon0 + (j + u(rng)) * dlon;
      fn(lat, lon, w);
    }
  }
}

inline double mc_area(const GeoShape& shape, int per_axis = 1000, std::uint64_t seed = 7) {
  double total = 0.0;
  monte_carlo(box_of({&shape}), per_axis, seed, [&](double lat, double lon, double w) {
    if (oracle_contains(shape, lat, lon)) total += w;
  });
  return total;
}

/// Great-circle distance by the spherical law of cosines.
inline double law_of_cosines_km(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kDegToRad, p2 = lat2 * kDegToRad, dl = (lon2 - lon1) * kDegToRad;
  const double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  return kRadiusKm * std::acos(std::clamp(c, -1.0, 1.0));
}

/// Discrete symmetric Hausdorff distance between vertex sets, degrees.
inline double hausdorff_deg(const Ring& a, const Ring& b) {
  auto directed = [](const Ring& x, const Ring& y) {
    double worst = 0.0;
    for (const auto& p : x) {
      double best = 1e300;
      for (const auto& q : y) best = std::min(best, std::hypot(p.lat - q.lat, p.lon - q.lon));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

/// Planar distance from a point to a closed ring's boundary, degrees.
inline double distance_to_boundary_deg(const Ring& ring, const GeoPoint& p) {
  double best = 1e300;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double ax = ring[i].lon, ay = ring[i].lat, bx = ring[i + 1].lon, by = ring[i + 1].lat;
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.lon - ax) * dx + (p.lat - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(p.lon - (ax + t * dx), p.lat - (ay + t * dy)));
  }
  return best;
}

inline std::filesystem::path fixtures_dir() { return GEOANIM_TEST_FIXTURES_DIR; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 rng{std::random_device{}()};
  auto dir = std::filesystem::temp_directory_path() / ("geoanim-" + name + "-" + std::to_string(rng()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace geoanim::testing
