#pragma once

#include <array>
#include <vector>

#include "morphforge/warp/landmarks.hpp"

namespace morphforge::warp {

using Triangle = std::array<int, 3>;

/// Delaunay triangulation of arbitrary points: a lexicographic sweep builds a
/// hull triangulation, then Lawson flips make every edge locally Delaunay.
/// Triangles are counter-clockwise in (x, y), rotated so the smallest index
/// comes first, and sorted. Cocircular quadruples are never flipped (strict
/// incircle test), so ties resolve by the sweep's (x, y, index) order.
/// Repeated points are triangulated once (first occurrence). Fewer than three
/// distinct points or an all-collinear input raise DataError.
std::vector<Triangle> delaunay(const std::vector<Point2>& points);

/// Positive when d lies strictly inside the circumcircle of CCW (a, b, c).
long double incircle(const Point2& a, const Point2& b, const Point2& c,
                     const Point2& d);
/// Twice the signed area; positive for counter-clockwise.
double orient2d(const Point2& a, const Point2& b, const Point2& c);

inline constexpr int kAnchorCount = 8;
inline constexpr int kMeshVertexCount = kLandmarkCount + kAnchorCount;

struct TriangleMesh {
  std::vector<Point2> vertices;
  std::vector<Triangle> triangles;
};

/// The 8 border anchors: the four frame corners then the four edge midpoints.
std::vector<Point2> border_anchors(int width, int height);

/// Landmarks followed by the border anchors.
std::vector<Point2> augmented_vertices(const LandmarkSet& landmarks, int width,
                                       int height);

/// Delaunay mesh over the 68 landmarks plus 8 border anchors of a square frame.
TriangleMesh triangulate(const LandmarkSet& landmarks, int resolution);

}  // namespace morphforge::warp
