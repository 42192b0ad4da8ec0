#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geoanim/model.hpp"

namespace geoanim::geometry {

/// Mean Earth radius (IUGG), kilometres.
inline constexpr double kEarthRadiusKm = 6371.0088;

/// Snap grid for boolean operations, degrees (about 1 cm).
inline constexpr double kSnapTolerance = 1e-7;

/// Great-circle distance in kilometres.
double haversine(const GeoPoint& p, const GeoPoint& q);

/// Initial bearing from p to q, degrees in [0, 360).
double bearing(const GeoPoint& p, const GeoPoint& q);

/// Spherical area in square kilometres, taking edges as straight lines in
/// lon/lat (the same edges the boolean operations use). Holes subtract.
/// Throws InvalidGeometryError for open rings or non-area shapes.
double area(const GeoShape& shape);

/// Union of polygon/multipolygon shapes. Vertices are snapped to
/// kSnapTolerance first so independently digitised shared borders merge.
/// Throws EmptyInputError for an empty list.
GeoShape union_of(std::span<const GeoShape> shapes);

/// shape minus mask; may return the empty shape.
GeoShape difference(const GeoShape& shape, const GeoShape& mask);

/// Even-odd point-in-shape test for area shapes (planar lon/lat).
bool contains(const GeoShape& shape, const GeoPoint& p);

struct Extent {
  BoundingBox box;
  GeoPoint centroid;
};

/// Bounding box plus centroid: area-weighted for area shapes, arc-length
/// midpoint for lines, the point itself for points.
Extent extent(const GeoShape& shape);

struct PathPose {
  GeoPoint position;
  double heading = 0.0;  // degrees clockwise from north
};

/// Position at an arc-length fraction (haversine segment lengths, linear
/// lat/lon inside a segment). The fraction is clamped to [0, 1].
PathPose point_along(const GeoShape& path, double fraction);
PathPose point_along(std::span<const GeoPoint> path, double fraction);

/// Cumulative haversine length of a path, kilometres.
double path_length(std::span<const GeoPoint> path);

/// Vertices of `path` up to the given fraction, ending exactly at the
/// interpolated head.
std::vector<GeoPoint> path_prefix(std::span<const GeoPoint> path, double fraction);

// --- Morphing ---------------------------------------------------------------

/// Minimum resampled vertex count used by morph.
inline constexpr std::size_t kMinMorphVertices = 64;

/// Closed ring with `count` distinct vertices spaced uniformly by planar
/// arc length (plus the closing vertex), starting at ring[0].
Ring resample_ring(const Ring& ring, std::size_t count);

/// Two resampled counter-clockwise rings of equal size N (N >= 8) plus the
/// rotation offset into `target` minimising summed squared distance.
struct RingCorrespondence {
  Ring source;  // N distinct vertices, not closed
  Ring target;  // N distinct vertices, not closed
  std::size_t offset = 0;
};

/// Outer ring of the largest polygon of an area shape.
Ring largest_ring(const GeoShape& shape);

RingCorrespondence correspond(const Ring& a, const Ring& b);
RingCorrespondence correspond(const GeoShape& a, const GeoShape& b);

/// Per-vertex linear interpolation along a correspondence; closed polygon.
GeoShape interpolate(const RingCorrespondence& corr, double fraction);

/// Multipolygons use their largest ring. Throws InvalidGeometryError for
/// zero-area rings.
GeoShape morph(const GeoShape& a, const GeoShape& b, double fraction);

/// Planar signed area of a ring in square degrees (positive when
/// counter-clockwise in lon/lat).
double signed_area_deg2(const Ring& ring);

}  // namespace geoanim::geometry
