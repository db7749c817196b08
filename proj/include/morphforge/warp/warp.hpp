#pragma once

#include <string>
#include <vector>

#include "morphforge/core/image.hpp"
#include "morphforge/warp/delaunay.hpp"

namespace morphforge::warp {

struct WarpReport {
  int degenerate_triangles = 0;
  int uncovered_pixels = 0;
  std::vector<std::string> warnings;
};

/// Bilinear sample with clamp-to-edge addressing.
double sample_bilinear(const Tensor& img, int channel, double x, double y);

/// Inverse-mapped piecewise-affine warp. `mesh` is built on the destination
/// vertices; `src` and `dst` are the full vertex lists (landmarks + anchors).
/// Each destination pixel takes the first triangle that contains it and is
/// sampled bilinearly at the corresponding source location. A source triangle
/// of (near) zero area borrows the map of the nearest valid triangle and adds
/// a warning to `report`. Output is clamped to [0,1].
Image piecewise_affine_warp(const Image& img, const std::vector<Point2>& src,
                            const std::vector<Point2>& dst,
                            const TriangleMesh& mesh,
                            WarpReport* report = nullptr);

/// Warps `img` so that landmarks `from` move onto `to` (anchors fixed).
Image warp_to(const Image& img, const LandmarkSet& from, const LandmarkSet& to,
              const TriangleMesh& mesh, WarpReport* report = nullptr);

}  // namespace morphforge::warp
