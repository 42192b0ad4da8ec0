#include "geoanim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "geoanim/errors.hpp"

namespace geoanim::geometry {

namespace bg = boost::geometry;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// x = lon, y = lat; counter-clockwise outer rings, closed.
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, false, true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

// Slivers left by near-coincident borders, square degrees (~10 m^2).
constexpr double kSliverArea = 1e-9;

// --- Lambert azimuthal equal-area about (lat0, lon0) ------------------------

struct Laea {
  double lat0, lon0, sin0, cos0;

  Laea(double lat, double lon) : lat0(lat * kDeg), lon0(lon * kDeg), sin0(std::sin(lat0)), cos0(std::cos(lat0)) {}

  std::pair<double, double> forward(const GeoPoint& p) const {
    const double phi = p.lat * kDeg, dl = p.lon * kDeg - lon0;
    const double sp = std::sin(phi), cp = std::cos(phi), cd = std::cos(dl);
    const double denom = 1.0 + sin0 * sp + cos0 * cp * cd;
    const double k = denom > 1e-15 ? std::sqrt(2.0 / denom) : 0.0;
    return {kEarthRadiusKm * k * cp * std::sin(dl), kEarthRadiusKm * k * (cos0 * sp - sin0 * cp * cd)};
  }

  GeoPoint inverse(double x, double y) const {
    const double rho = std::hypot(x, y);
    if (rho < 1e-12) return {lat0 / kDeg, lon0 / kDeg};
    const double c = 2.0 * std::asin(std::min(1.0, rho / (2.0 * kEarthRadiusKm)));
    const double sc = std::sin(c), cc = std::cos(c);
    const double phi = std::asin(std::clamp(cc * sin0 + y * sc * cos0 / rho, -1.0, 1.0));
    const double lam = lon0 + std::atan2(x * sc, rho * cos0 * cc - y * sin0 * sc);
    return {phi / kDeg, lam / kDeg};
  }
};

BoundingBox bbox_of(const GeoShape& shape) {
  BoundingBox box{{90.0, 180.0}, {-90.0, -180.0}};
  auto grow = [&](const GeoPoint& p) {
    box.min.lat = std::min(box.min.lat, p.lat);
    box.min.lon = std::min(box.min.lon, p.lon);
    box.max.lat = std::max(box.max.lat, p.lat);
    box.max.lon = std::max(box.max.lon, p.lon);
  };
  for (const auto& p : shape.path) grow(p);
  for (const auto& poly : shape.polygons)
    for (const auto& ring : poly)
      for (const auto& p : ring) grow(p);
  return box;
}

Laea projection_for(const GeoShape& shape) {
  auto box = bbox_of(shape);
  return Laea((box.min.lat + box.max.lat) / 2.0, (box.min.lon + box.max.lon) / 2.0);
}

void require_area_shape(const GeoShape& shape, const char* op) {
  if (!shape.is_area()) {
    throw InvalidGeometryError(std::string(op) + " requires a polygon or multipolygon, got " + to_string(shape.kind));
  }
  auto problems = shape_problems(shape);
  if (!problems.empty()) {
    throw InvalidGeometryError(std::string(op) + ": " + problems.front(), {{"problems", problems}});
  }
}

void reject_antimeridian(const GeoShape& shape) {
  for (const auto& poly : shape.polygons) {
    if (poly.empty()) continue;
    double lo = 180.0, hi = -180.0;
    for (const auto& p : poly.front()) {
      lo = std::min(lo, p.lon);
      hi = std::max(hi, p.lon);
    }
    if (hi - lo > 180.0) {
      throw AntimeridianError("polygons crossing the antimeridian are not supported",
                              {{"min_lon", lo}, {"max_lon", hi}});
    }
  }
}

// Ring signed area in lon/lat with a local projected shoelace.
// Spherical area enclosed by a ring whose edges are straight in lon/lat, by
// Green's theorem: A = R^2 * |sum over edges of the integral of sin(lat) dlon|.
// With lat linear in lon along an edge the integral is
// dlon * sin(mid lat) * sinc(dlat / 2), which stays exact for parallels.
double ring_area_km2(const Ring& ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double p0 = ring[i].lat * kDeg, p1 = ring[i + 1].lat * kDeg;
    const double dl = (ring[i + 1].lon - ring[i].lon) * kDeg;
    const double h = (p1 - p0) / 2.0;
    const double sinc = std::fabs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h;
    acc += dl * std::sin((p0 + p1) / 2.0) * sinc;
  }
  return std::fabs(acc) * kEarthRadiusKm * kEarthRadiusKm;
}

// --- Snap rounding -----------------------------------------------------------

struct CellKey {
  long long x, y;
  bool operator==(const CellKey&) const = default;
};
struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return std::hash<long long>()(k.x * 73856093LL) ^ std::hash<long long>()(k.y * 19349663LL);
  }
};

/// Maps every vertex onto the snap grid and collapses vertices that land in
/// neighbouring cells onto the first one seen, so borders digitised
/// independently by the geocoder meet exactly.
class Snapper {
 public:
  GeoPoint snap(const GeoPoint& p) {
    CellKey key{std::llround(p.lon / kSnapTolerance), std::llround(p.lat / kSnapTolerance)};
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find({key.x + dx, key.y + dy});
        if (it != cells_.end()) return it->second;
      }
    }
    GeoPoint snapped{static_cast<double>(key.y) * kSnapTolerance, static_cast<double>(key.x) * kSnapTolerance};
    cells_.emplace(key, snapped);
    return snapped;
  }

 private:
  std::unordered_map<CellKey, GeoPoint, CellHash> cells_;
};

bg::model::ring<BPoint, false, true> to_bring(const Ring& ring, Snapper& snapper) {
  bg::model::ring<BPoint, false, true> out;
  for (const auto& p : ring) {
    auto s = snapper.snap(p);
    BPoint bp(s.lon, s.lat);
    if (!out.empty() && bg::equals(out.back(), bp)) continue;
    out.push_back(bp);
  }
  return out;
}

BMulti to_boost(const GeoShape& shape, Snapper& snapper) {
  BMulti multi;
  for (const auto& poly : shape.polygons) {
    if (poly.empty()) continue;
    BPolygon bp;
    bp.outer() = to_bring(poly.front(), snapper);
    if (bp.outer().size() < 4) continue;
    for (std::size_t i = 1; i < poly.size(); ++i) {
      auto hole = to_bring(poly[i], snapper);
      if (hole.size() >= 4) bp.inners().push_back(std::move(hole));
    }
    multi.push_back(std::move(bp));
  }
  bg::correct(multi);
  std::string reason;
  if (!bg::is_valid(multi, reason)) {
    // Overlapping members of one multipolygon are legal input for us; fold them.
    BMulti folded;
    for (const auto& p : multi) {
      BMulti tmp;
      bg::union_(folded, p, tmp);
      folded = std::move(tmp);
    }
    if (!bg::is_valid(folded, reason)) {
      throw InvalidGeometryError("invalid polygon geometry: " + reason, {{"reason", reason}});
    }
    return folded;
  }
  return multi;
}

// Drops vertices that sit on the straight line between their neighbours.
template <class BRing>
Ring clean_ring(const BRing& ring) {
  Ring pts;
  for (const auto& p : ring) pts.push_back({p.y(), p.x()});
  if (!pts.empty() && pts.front() == pts.back()) pts.pop_back();
  bool changed = true;
  while (changed && pts.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size() && pts.size() > 3; ++i) {
      const auto& a = pts[(i + pts.size() - 1) % pts.size()];
      const auto& b = pts[i];
      const auto& c = pts[(i + 1) % pts.size()];
      const double abx = c.lon - a.lon, aby = c.lat - a.lat;
      const double len = std::hypot(abx, aby);
      const double cross = (b.lon - a.lon) * aby - (b.lat - a.lat) * abx;
      const double dist = len > 0 ? std::fabs(cross) / len : std::hypot(b.lon - a.lon, b.lat - a.lat);
      const double dot = (b.lon - a.lon) * abx + (b.lat - a.lat) * aby;
      if (dist < kSnapTolerance * 0.1 && dot >= 0 && dot <= len * len) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        --i;
      }
    }
  }
  if (!pts.empty()) pts.push_back(pts.front());
  return pts;
}

GeoShape from_boost(const BMulti& multi) {
  std::vector<PolygonRings> polys;
  for (const auto& bp : multi) {
    if (std::fabs(bg::area(bp.outer())) < kSliverArea) continue;
    PolygonRings rings;
    rings.push_back(clean_ring(bp.outer()));
    for (const auto& hole : bp.inners()) {
      if (std::fabs(bg::area(hole)) < kSliverArea) continue;
      rings.push_back(clean_ring(hole));
    }
    if (rings.front().size() >= 4) polys.push_back(std::move(rings));
  }
  if (polys.size() == 1) {
    GeoShape s;
    s.kind = ShapeKind::polygon;
    s.polygons = std::move(polys);
    return s;
  }
  return GeoShape::make_multipolygon(std::move(polys));
}

bool ring_contains(const Ring& ring, const GeoPoint& p) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
      if (p.lon < x) inside = !inside;
    }
  }
  return inside;
}

double planar_dist2(const GeoPoint& a, const GeoPoint& b) {
  const double dx = a.lon - b.lon, dy = a.lat - b.lat;
  return dx * dx + dy * dy;
}

Ring open_ccw(const Ring& ring) {
  Ring pts = ring;
  if (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
  if (signed_area_deg2(ring) < 0.0) std::reverse(pts.begin() + 1, pts.end());
  return pts;
}

}  // namespace

double haversine(const GeoPoint& p, const GeoPoint& q) {
  const double dlat = (q.lat - p.lat) * kDeg, dlon = (q.lon - p.lon) * kDeg;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(p.lat * kDeg) * std::cos(q.lat * kDeg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

double bearing(const GeoPoint& p, const GeoPoint& q) {
  const double phi1 = p.lat * kDeg, phi2 = q.lat * kDeg, dl = (q.lon - p.lon) * kDeg;
  const double y = std::sin(dl) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dl);
  double deg = std::atan2(y, x) / kDeg;
  deg = std::fmod(deg + 360.0, 360.0);
  return deg >= 360.0 ? 0.0 : deg;
}

double signed_area_deg2(const Ring& ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    acc += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
  }
  if (!ring.empty() && !(ring.front() == ring.back())) {
    acc += ring.back().lon * ring.front().lat - ring.front().lon * ring.back().lat;
  }
  return acc / 2.0;
}

double area(const GeoShape& shape) {
  require_area_shape(shape, "area");
  if (shape.is_empty()) return 0.0;
  double total = 0.0;
  for (const auto& poly : shape.polygons) {
    double a = ring_area_km2(poly.front());
    for (std::size_t i = 1; i < poly.size(); ++i) a -= ring_area_km2(poly[i]);
    total += std::max(0.0, a);
  }
  return total;
}

GeoShape union_of(std::span<const GeoShape> shapes) {
  if (shapes.empty()) throw EmptyInputError("union needs at least one shape");
  Snapper snapper;
  BMulti acc;
  for (const auto& s : shapes) {
    require_area_shape(s, "union");
    reject_antimeridian(s);
    BMulti next = to_boost(s, snapper);
    BMulti tmp;
    bg::union_(acc, next, tmp);
    acc = std::move(tmp);
  }
  return from_boost(acc);
}

GeoShape difference(const GeoShape& shape, const GeoShape& mask) {
  require_area_shape(shape, "difference");
  require_area_shape(mask, "difference");
  reject_antimeridian(shape);
  reject_antimeridian(mask);
  Snapper snapper;
  BMulti a = to_boost(shape, snapper);
  BMulti m = to_boost(mask, snapper);
  BMulti out;
  bg::difference(a, m, out);
  return from_boost(out);
}

bool contains(const GeoShape& shape, const GeoPoint& p) {
  for (const auto& poly : shape.polygons) {
    if (poly.empty() || !ring_contains(poly.front(), p)) continue;
    bool in_hole = false;
    for (std::size_t i = 1; i < poly.size() && !in_hole; ++i) in_hole = ring_contains(poly[i], p);
    if (!in_hole) return true;
  }
  return false;
}

Extent extent(const GeoShape& shape) {
  if (shape.is_empty()) throw EmptyInputError("extent of an empty shape");
  Extent ext{bbox_of(shape), {}};
  switch (shape.kind) {
    case ShapeKind::point: ext.centroid = shape.path.front(); break;
    case ShapeKind::line: ext.centroid = point_along(shape, 0.5).position; break;
    case ShapeKind::polygon:
    case ShapeKind::multipolygon: {
      const Laea proj = projection_for(shape);
      double sa = 0.0, sx = 0.0, sy = 0.0;
      for (const auto& poly : shape.polygons) {
        for (std::size_t r = 0; r < poly.size(); ++r) {
          const auto& ring = poly[r];
          double a = 0.0, cx = 0.0, cy = 0.0;
          for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            auto p = proj.forward(ring[i]);
            auto q = proj.forward(ring[i + 1]);
            const double cross = p.first * q.second - q.first * p.second;
            a += cross;
            cx += (p.first + q.first) * cross;
            cy += (p.second + q.second) * cross;
          }
          a /= 2.0;
          if (std::fabs(a) < 1e-15) continue;
          cx /= 6.0 * a;
          cy /= 6.0 * a;
          const double weight = r == 0 ? std::fabs(a) : -std::fabs(a);
          sa += weight;
          sx += weight * cx;
          sy += weight * cy;
        }
      }
      if (std::fabs(sa) > 1e-12) {
        ext.centroid = proj.inverse(sx / sa, sy / sa);
      } else {
        ext.centroid = {(ext.box.min.lat + ext.box.max.lat) / 2.0, (ext.box.min.lon + ext.box.max.lon) / 2.0};
      }
      break;
    }
  }
  return ext;
}

double path_length(std::span<const GeoPoint> path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) total += haversine(path[i - 1], path[i]);
  return total;
}

namespace {

struct PathLocation {
  std::size_t segment = 0;  // index of segment start vertex
  double local = 0.0;       // fraction inside the segment
  bool at_end = false;
};

PathLocation locate(std::span<const GeoPoint> path, double fraction) {
  PathLocation loc;
  const double total = path_length(path);
  if (fraction >= 1.0) {
    loc.at_end = true;
    loc.segment = path.size() - 2;
    loc.local = 1.0;
    return loc;
  }
  if (fraction <= 0.0 || total <= 0.0) return loc;
  const double target = fraction * total;
  double walked = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double seg = haversine(path[i], path[i + 1]);
    if (walked + seg >= target && seg > 0.0) {
      loc.segment = i;
      loc.local = std::clamp((target - walked) / seg, 0.0, 1.0);
      return loc;
    }
    walked += seg;
  }
  loc.at_end = true;
  loc.segment = path.size() - 2;
  loc.local = 1.0;
  return loc;
}

double segment_heading(std::span<const GeoPoint> path, std::size_t seg) {
  // Zero-length segments inherit the nearest preceding real heading.
  for (std::size_t i = seg + 1; i-- > 0;) {
    if (!(path[i] == path[i + 1])) return bearing(path[i], path[i + 1]);
  }
  for (std::size_t i = seg + 1; i + 1 < path.size(); ++i) {
    if (!(path[i] == path[i + 1])) return bearing(path[i], path[i + 1]);
  }
  return 0.0;
}

}  // namespace

PathPose point_along(std::span<const GeoPoint> path, double fraction) {
  if (path.empty()) throw EmptyInputError("point_along on an empty path");
  if (path.size() == 1) return {path.front(), 0.0};
  if (!(fraction >= 0.0)) fraction = 0.0;  // also catches NaN
  fraction = std::min(fraction, 1.0);
  if (fraction == 0.0) return {path.front(), segment_heading(path, 0)};
  auto loc = locate(path, fraction);
  if (loc.at_end) return {path.back(), segment_heading(path, path.size() - 2)};
  const auto& a = path[loc.segment];
  const auto& b = path[loc.segment + 1];
  GeoPoint pos{a.lat + (b.lat - a.lat) * loc.local, a.lon + (b.lon - a.lon) * loc.local};
  return {pos, segment_heading(path, loc.segment)};
}

PathPose point_along(const GeoShape& path, double fraction) {
  if (path.kind != ShapeKind::line && path.kind != ShapeKind::point) {
    throw InvalidGeometryError("point_along requires a line shape");
  }
  return point_along(std::span<const GeoPoint>(path.path), fraction);
}

std::vector<GeoPoint> path_prefix(std::span<const GeoPoint> path, double fraction) {
  if (path.empty()) return {};
  if (path.size() == 1 || !(fraction > 0.0)) return {path.front()};
  if (fraction >= 1.0) return {path.begin(), path.end()};
  auto loc = locate(path, fraction);
  std::vector<GeoPoint> out(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(loc.segment + 1));
  out.push_back(point_along(path, fraction).position);
  return out;
}

Ring resample_ring(const Ring& ring, std::size_t count) {
  if (count < 3) throw InvalidGeometryError("resample needs at least 3 vertices");
  Ring pts = ring;
  if (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
  if (pts.size() < 3) throw InvalidGeometryError("ring has fewer than 3 distinct vertices");
  std::vector<double> cum(pts.size() + 1, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    cum[i + 1] = cum[i] + std::sqrt(planar_dist2(pts[i], pts[(i + 1) % pts.size()]));
  }
  const double perimeter = cum.back();
  if (!(perimeter > 0.0)) throw InvalidGeometryError("degenerate ring with zero perimeter");

  Ring out;
  out.reserve(count + 1);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double target = perimeter * static_cast<double>(k) / static_cast<double>(count);
    while (seg + 1 < pts.size() && cum[seg + 1] <= target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    const auto& a = pts[seg];
    const auto& b = pts[(seg + 1) % pts.size()];
    out.push_back(t == 0.0 ? a : GeoPoint{a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t});
  }
  out.push_back(out.front());
  return out;
}

Ring largest_ring(const GeoShape& shape) {
  if (!shape.is_area() || shape.is_empty()) throw InvalidGeometryError("morph requires a non-empty polygon");
  const PolygonRings* best = nullptr;
  double best_area = -1.0;
  for (const auto& poly : shape.polygons) {
    if (poly.empty()) continue;
    const double a = std::fabs(signed_area_deg2(poly.front()));
    if (a > best_area) {
      best_area = a;
      best = &poly;
    }
  }
  if (!best) throw InvalidGeometryError("morph requires a non-empty polygon");
  return best->front();
}

RingCorrespondence correspond(const Ring& a, const Ring& b) {
  if (std::fabs(signed_area_deg2(a)) <= 0.0 || std::fabs(signed_area_deg2(b)) <= 0.0) {
    throw InvalidGeometryError("morph on a zero-area ring");
  }
  const Ring ca = open_ccw(a);
  const Ring cb = open_ccw(b);
  const std::size_t n = std::max({kMinMorphVertices, ca.size(), cb.size()});

  Ring ra = resample_ring(ca, n);
  Ring rb = resample_ring(cb, n);
  ra.pop_back();
  rb.pop_back();

  std::size_t best_offset = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    double cost = 0.0;
    for (std::size_t i = 0; i < n && cost < best_cost; ++i) cost += planar_dist2(ra[i], rb[(i + k) % n]);
    if (cost < best_cost) {
      best_cost = cost;
      best_offset = k;
    }
  }
  return {std::move(ra), std::move(rb), best_offset};
}

RingCorrespondence correspond(const GeoShape& a, const GeoShape& b) {
  return correspond(largest_ring(a), largest_ring(b));
}

GeoShape interpolate(const RingCorrespondence& corr, double fraction) {
  const double f = std::clamp(std::isnan(fraction) ? 0.0 : fraction, 0.0, 1.0);
  const std::size_t n = corr.source.size();
  Ring ring;
  ring.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = corr.source[i];
    const auto& t = corr.target[(i + corr.offset) % n];
    ring.push_back({(1.0 - f) * s.lat + f * t.lat, (1.0 - f) * s.lon + f * t.lon});
  }
  ring.push_back(ring.front());
  return GeoShape::make_polygon(std::move(ring));
}

GeoShape morph(const GeoShape& a, const GeoShape& b, double fraction) {
  return interpolate(correspond(a, b), fraction);
}

}  // namespace geoanim::geometry
