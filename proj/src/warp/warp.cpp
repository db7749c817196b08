#include "morphforge/warp/warp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "morphforge/core/error.hpp"

namespace morphforge::warp {

double sample_bilinear(const Tensor& img, int channel, double x, double y) {
  const int w = img.width();
  const int h = img.height();
  x = std::clamp(x, 0.0, w - 1.0);
  y = std::clamp(y, 0.0, h - 1.0);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * img.at(channel, y0, x0) + fx * img.at(channel, y0, x1);
  const double bottom =
      (1.0 - fx) * img.at(channel, y1, x0) + fx * img.at(channel, y1, x1);
  return (1.0 - fy) * top + fy * bottom;
}

namespace {

constexpr double kDegenerateArea = 1e-9;

Point2 centroid(const std::vector<Point2>& v, const Triangle& t) {
  return {(v[t[0]].x + v[t[1]].x + v[t[2]].x) / 3.0,
          (v[t[0]].y + v[t[1]].y + v[t[2]].y) / 3.0};
}

}  // namespace

Image piecewise_affine_warp(const Image& img, const std::vector<Point2>& src,
                            const std::vector<Point2>& dst,
                            const TriangleMesh& mesh, WarpReport* report) {
  require_image(img, "piecewise_affine_warp");
  if (src.size() != dst.size()) {
    throw StructuralError("piecewise_affine_warp: " +
                          std::to_string(src.size()) + " source vs " +
                          std::to_string(dst.size()) + " destination vertices");
  }
  for (const Triangle& t : mesh.triangles) {
    for (int v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= dst.size()) {
        throw StructuralError("piecewise_affine_warp: mesh index out of range");
      }
    }
  }
  const int H = img.height();
  const int W = img.width();
  const auto& tris = mesh.triangles;

  // Source triangle per destination triangle (substituted when degenerate).
  std::vector<int> map_from(tris.size());
  std::vector<bool> valid(tris.size());
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const Triangle& t = tris[i];
    valid[i] = std::abs(orient2d(src[t[0]], src[t[1]], src[t[2]])) >
               kDegenerateArea;
    map_from[i] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < tris.size(); ++i) {
    if (valid[i]) continue;
    const Point2 c = centroid(dst, tris[i]);
    double best = std::numeric_limits<double>::infinity();
    int pick = -1;
    for (std::size_t j = 0; j < tris.size(); ++j) {
      if (!valid[j]) continue;
      const Point2 cj = centroid(dst, tris[j]);
      const double d = (cj.x - c.x) * (cj.x - c.x) + (cj.y - c.y) * (cj.y - c.y);
      if (d < best) {
        best = d;
        pick = static_cast<int>(j);
      }
    }
    if (pick < 0) throw NumericError("piecewise_affine_warp: every source triangle is degenerate");
    map_from[i] = pick;
    if (report) {
      ++report->degenerate_triangles;
      report->warnings.push_back("degenerate source triangle " +
                                 std::to_string(i) + " uses map of triangle " +
                                 std::to_string(pick));
    }
  }

  Image out = make_image(H, W);
  std::vector<char> filled(static_cast<std::size_t>(H) * W, 0);
  constexpr double kEdgeTol = -1e-9;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const Triangle& t = tris[i];
    const Point2& d0 = dst[t[0]];
    const Point2& d1 = dst[t[1]];
    const Point2& d2 = dst[t[2]];
    const double area = orient2d(d0, d1, d2);
    if (std::abs(area) <= kDegenerateArea) continue;

    // Affine map destination -> source, taken from the (possibly borrowed)
    // triangle: src = A * [x, y, 1].
    const Triangle& mt = tris[map_from[i]];
    const Point2& m0 = dst[mt[0]];
    const Point2& m1 = dst[mt[1]];
    const Point2& m2 = dst[mt[2]];
    const double marea = orient2d(m0, m1, m2);
    const Point2& s0 = src[mt[0]];
    const Point2& s1 = src[mt[1]];
    const Point2& s2 = src[mt[2]];

    const int x_lo = std::max(0, static_cast<int>(std::ceil(std::min({d0.x, d1.x, d2.x}) - 1e-9)));
    const int x_hi = std::min(W - 1, static_cast<int>(std::floor(std::max({d0.x, d1.x, d2.x}) + 1e-9)));
    const int y_lo = std::max(0, static_cast<int>(std::ceil(std::min({d0.y, d1.y, d2.y}) - 1e-9)));
    const int y_hi = std::min(H - 1, static_cast<int>(std::floor(std::max({d0.y, d1.y, d2.y}) + 1e-9)));
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * W + x;
        if (filled[pix]) continue;
        const Point2 p{static_cast<double>(x), static_cast<double>(y)};
        const double l0 = orient2d(d1, d2, p) / area;
        const double l1 = orient2d(d2, d0, p) / area;
        const double l2 = orient2d(d0, d1, p) / area;
        if (l0 < kEdgeTol || l1 < kEdgeTol || l2 < kEdgeTol) continue;
        // Barycentric coordinates in the mapping triangle.
        const double b0 = orient2d(m1, m2, p) / marea;
        const double b1 = orient2d(m2, m0, p) / marea;
        const double b2 = orient2d(m0, m1, p) / marea;
        const double sx = b0 * s0.x + b1 * s1.x + b2 * s2.x;
        const double sy = b0 * s0.y + b1 * s1.y + b2 * s2.y;
        for (int c = 0; c < 3; ++c) {
          out.at(c, y, x) = sample_bilinear(img, c, sx, sy);
        }
        filled[pix] = 1;
      }
    }
  }
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (filled[static_cast<std::size_t>(y) * W + x]) continue;
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = img.at(c, y, x);
      if (report) ++report->uncovered_pixels;
    }
  }
  clamp01(out);
  return out;
}

Image warp_to(const Image& img, const LandmarkSet& from, const LandmarkSet& to,
              const TriangleMesh& mesh, WarpReport* report) {
  return piecewise_affine_warp(img,
                               augmented_vertices(from, img.width(), img.height()),
                               augmented_vertices(to, img.width(), img.height()),
                               mesh, report);
}

}  // namespace morphforge::warp
