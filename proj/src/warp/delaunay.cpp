#include "morphforge/warp/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "morphforge/core/error.hpp"

namespace morphforge::warp {

double orient2d(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

long double incircle(const Point2& a, const Point2& b, const Point2& c,
                     const Point2& d) {
  const long double adx = static_cast<long double>(a.x) - d.x;
  const long double ady = static_cast<long double>(a.y) - d.y;
  const long double bdx = static_cast<long double>(b.x) - d.x;
  const long double bdy = static_cast<long double>(b.y) - d.y;
  const long double cdx = static_cast<long double>(c.x) - d.x;
  const long double cdy = static_cast<long double>(c.y) - d.y;
  return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
         (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
}

namespace {

Triangle canonical(Triangle t) {
  const auto it = std::min_element(t.begin(), t.end());
  std::rotate(t.begin(), it, t.end());
  return t;
}

/// Triangle soup with a directed-edge index; every triangle is CCW and the
/// directed edge (u, v) belongs to the triangle that has v after u.
class Triangulation {
 public:
  explicit Triangulation(const std::vector<Point2>& pts) : pts_(pts) {}

  void add(Triangle t) {
    if (orient2d(pts_[t[0]], pts_[t[1]], pts_[t[2]]) < 0.0) {
      std::swap(t[1], t[2]);
    }
    const int id = static_cast<int>(tris_.size());
    tris_.push_back(t);
    alive_.push_back(true);
    for (int e = 0; e < 3; ++e) edges_[{t[e], t[(e + 1) % 3]}] = id;
  }

  void remove(int id) {
    const Triangle& t = tris_[id];
    for (int e = 0; e < 3; ++e) edges_.erase({t[e], t[(e + 1) % 3]});
    alive_[id] = false;
  }

  /// Lawson flips until every interior edge is locally Delaunay.
  void legalize() {
    std::vector<std::pair<int, int>> stack;
    for (const auto& [edge, id] : edges_) stack.push_back(edge);
    const std::size_t cap = 64 * (pts_.size() + 1) * (pts_.size() + 1);
    std::size_t flips = 0;
    while (!stack.empty()) {
      const auto [a, b] = stack.back();
      stack.pop_back();
      const auto f = edges_.find({a, b});
      const auto r = edges_.find({b, a});
      if (f == edges_.end() || r == edges_.end()) continue;
      const int t1 = f->second;
      const int t2 = r->second;
      const int c = third(tris_[t1], a, b);
      const int d = third(tris_[t2], b, a);
      if (incircle(pts_[a], pts_[b], pts_[c], pts_[d]) <= 0.0L) continue;
      if (++flips > cap) throw NumericError("delaunay: edge flipping diverged");
      remove(t1);
      remove(t2);
      add({a, d, c});
      add({d, b, c});
      stack.push_back({a, d});
      stack.push_back({d, b});
      stack.push_back({b, c});
      stack.push_back({c, a});
    }
  }

  std::vector<Triangle> triangles() const {
    std::vector<Triangle> out;
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      if (alive_[i]) out.push_back(canonical(tris_[i]));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static int third(const Triangle& t, int a, int b) {
    for (int v : t) {
      if (v != a && v != b) return v;
    }
    return t[0];
  }

  const std::vector<Point2>& pts_;
  std::vector<Triangle> tris_;
  std::vector<bool> alive_;
  std::map<std::pair<int, int>, int> edges_;
};

}  // namespace

std::vector<Triangle> delaunay(const std::vector<Point2>& points) {
  const int n = static_cast<int>(points.size());
  // First occurrence of each distinct point.
  std::vector<int> order;
  {
    std::map<std::pair<double, double>, int> seen;
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
        throw DataError("cannot triangulate: non-finite point " +
                        std::to_string(i));
      }
      if (seen.emplace(std::pair{points[i].x, points[i].y}, i).second) {
        order.push_back(i);
      }
    }
  }
  if (order.size() < 3) {
    throw DataError("cannot triangulate: fewer than three distinct points");
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (points[a].x != points[b].x) return points[a].x < points[b].x;
    if (points[a].y != points[b].y) return points[a].y < points[b].y;
    return a < b;
  });

  // Sweep: seed with the collinear prefix fanned to the first point off it.
  std::size_t k = 2;
  while (k < order.size() &&
         orient2d(points[order[0]], points[order[1]], points[order[k]]) == 0.0) {
    ++k;
  }
  if (k == order.size()) {
    throw DataError("cannot triangulate: all points collinear");
  }
  Triangulation tri(points);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    tri.add({order[i], order[i + 1], order[k]});
  }
  // Counter-clockwise hull as a cyclic vertex list.
  std::vector<int> hull(order.begin(), order.begin() + k);
  hull.push_back(order[k]);
  {
    double area = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Point2& p = points[hull[i]];
      const Point2& q = points[hull[(i + 1) % hull.size()]];
      area += p.x * q.y - q.x * p.y;
    }
    if (area < 0.0) std::reverse(hull.begin(), hull.end());
  }

  for (std::size_t s = k + 1; s < order.size(); ++s) {
    const int p = order[s];
    const std::size_t m = hull.size();
    std::vector<bool> visible(m);
    for (std::size_t i = 0; i < m; ++i) {
      visible[i] = orient2d(points[hull[i]], points[hull[(i + 1) % m]],
                            points[p]) < 0.0;
    }
    std::size_t first = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (!visible[i] && visible[(i + 1) % m]) {
        first = (i + 1) % m;
        break;
      }
    }
    if (first == m) throw NumericError("delaunay: no visible hull edge");
    std::size_t count = 0;
    while (visible[(first + count) % m]) {
      const std::size_t i = (first + count) % m;
      tri.add({hull[(i + 1) % m], hull[i], p});
      ++count;
    }
    // Replace the interior vertices of the visible chain with p.
    std::vector<int> next;
    next.reserve(m + 1);
    const std::size_t last = (first + count) % m;  // chain end vertex
    for (std::size_t j = 0; j + count <= m; ++j) {
      next.push_back(hull[(last + j) % m]);
    }
    next.push_back(p);
    hull = std::move(next);
  }

  tri.legalize();
  return tri.triangles();
}

std::vector<Point2> border_anchors(int width, int height) {
  const double r = width - 1.0;
  const double b = height - 1.0;
  return {{0.0, 0.0},     {r, 0.0},       {0.0, b},     {r, b},
          {0.5 * r, 0.0}, {r, 0.5 * b},   {0.5 * r, b}, {0.0, 0.5 * b}};
}

std::vector<Point2> augmented_vertices(const LandmarkSet& landmarks, int width,
                                       int height) {
  std::vector<Point2> v = landmarks.points;
  const auto anchors = border_anchors(width, height);
  v.insert(v.end(), anchors.begin(), anchors.end());
  return v;
}

TriangleMesh triangulate(const LandmarkSet& landmarks, int resolution) {
  if (resolution <= 0) {
    throw ConfigError("triangulate: resolution must be positive");
  }
  validate_landmarks(landmarks, resolution, resolution);
  TriangleMesh mesh;
  mesh.vertices = augmented_vertices(landmarks, resolution, resolution);
  mesh.triangles = delaunay(mesh.vertices);
  return mesh;
}

}  // namespace morphforge::warp
