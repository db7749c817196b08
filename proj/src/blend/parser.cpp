#include "morphforge/blend/parser.hpp"

#include <algorithm>
#include <cmath>

#include "morphforge/core/error.hpp"
#include "morphforge/nn/ops.hpp"

namespace morphforge::blend {

using nn::Var;
using warp::LandmarkSet;
using warp::Point2;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Ellipse fit_ellipse(const LandmarkSet& lm, int first, int last, double grow_x,
                    double grow_y, double min_b_ratio) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300, sx = 0, sy = 0;
  for (int i = first; i <= last; ++i) {
    x0 = std::min(x0, lm[i].x);
    x1 = std::max(x1, lm[i].x);
    y0 = std::min(y0, lm[i].y);
    y1 = std::max(y1, lm[i].y);
    sx += lm[i].x;
    sy += lm[i].y;
  }
  const double n = last - first + 1;
  Ellipse e;
  e.cx = sx / n;
  e.cy = sy / n;
  e.a = std::max(0.5, 0.5 * (x1 - x0) * grow_x);
  e.b = std::max({0.5, 0.5 * (y1 - y0) * grow_y, min_b_ratio * e.a});
  return e;
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

// Positive inside, negative outside (pixels).
double signed_distance(const std::vector<Point2>& hull, double x, double y) {
  double best = 1e300;
  bool inside = true;
  const std::size_t n = hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = hull[i];
    const Point2& b = hull[(i + 1) % n];
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len2 = ex * ex + ey * ey;
    double t = len2 > 0 ? ((x - a.x) * ex + (y - a.y) * ey) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = x - (a.x + t * ex), dy = y - (a.y + t * ey);
    best = std::min(best, std::sqrt(dx * dx + dy * dy));
    // Hull is counter-clockwise in (x right, y down) coordinates when the
    // cross product is positive.
    if (ex * (y - a.y) - ey * (x - a.x) < 0) inside = false;
  }
  return inside ? best : -best;
}

}  // namespace

double Ellipse::membership(double x, double y, double softness) const {
  const double dx = (x - cx) / a, dy = (y - cy) / b;
  const double r = std::sqrt(dx * dx + dy * dy);
  // (1 - r) * min(a, b) approximates the signed distance to the boundary.
  return sigmoid((1.0 - r) * std::min(a, b) / softness);
}

Tensor GeometricParser::geometric_maps(const LandmarkSet& lm, int height,
                                       int width) const {
  if (lm.size() != warp::kLandmarkCount) {
    throw StructuralError("parser expects 68 landmarks");
  }
  const double s = cfg_.edge_softness;
  const Ellipse eye_l = fit_ellipse(lm, 36, 41, 1.3, 1.6, 0.45);
  const Ellipse eye_r = fit_ellipse(lm, 42, 47, 1.3, 1.6, 0.45);
  const Ellipse brow_l = fit_ellipse(lm, 17, 21, 1.15, 1.5, 0.3);
  const Ellipse brow_r = fit_ellipse(lm, 22, 26, 1.15, 1.5, 0.3);
  const Ellipse nose = fit_ellipse(lm, 27, 35, 1.3, 1.1, 0.3);
  const Ellipse mouth = fit_ellipse(lm, 48, 59, 1.15, 1.4, 0.3);
  std::vector<Point2> outline(lm.points.begin(), lm.points.begin() + 27);
  const std::vector<Point2> hull = convex_hull(outline);

  Tensor maps(5, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      maps.at(0, y, x) = sigmoid(signed_distance(hull, x, y) / s);
      maps.at(1, y, x) = std::max(eye_l.membership(x, y, s), eye_r.membership(x, y, s));
      maps.at(2, y, x) = nose.membership(x, y, s);
      maps.at(3, y, x) = std::max(brow_l.membership(x, y, s), brow_r.membership(x, y, s));
      maps.at(4, y, x) = mouth.membership(x, y, s);
    }
  }
  return maps;
}

ParserOutput GeometricParser::parse(const Var& img, const LandmarkSet& lm) const {
  const Tensor& v = img.value();
  if (v.channels() != 3) throw StructuralError("parser expects an RGB image");
  const int H = v.height(), W = v.width();
  Tensor border(1, H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (y == 0 || x == 0 || y == H - 1 || x == W - 1) border.at(0, y, x) = 1.0;
    }
  }
  const Var bg_colour = nn::weighted_channel_mean(img, border);
  const Var dist = nn::sqrt_eps(
      nn::channel_sum(nn::square(nn::add_pixel(img, nn::scale(bg_colour, -1.0)))), 1e-6);
  const Var gate = nn::sigmoid(
      nn::scale(nn::add_scalar(dist, -cfg_.gate_offset), cfg_.gate_sharpness));
  ParserOutput out;
  out.probs = nn::mul_mask(nn::constant(geometric_maps(lm, H, W)), gate);
  out.labels.assign(kFaceComponents.begin(), kFaceComponents.end());
  return out;
}

Var face_mask(const ParserOutput& parsed) {
  const Tensor& p = parsed.probs.value();
  if (static_cast<int>(parsed.labels.size()) != p.channels()) {
    throw StructuralError("parser labels do not match its channels");
  }
  std::vector<double> weights(p.channels(), 0.0);
  for (const char* name : kFaceComponents) {
    const auto it = std::find(parsed.labels.begin(), parsed.labels.end(), name);
    if (it == parsed.labels.end()) {
      throw ConfigError(std::string("parser output lacks the ") + name + " channel");
    }
    weights[it - parsed.labels.begin()] = 1.0;
  }
  return nn::clamp(nn::channel_weighted_sum(parsed.probs, weights), 0.0, 1.0);
}

Ellipse head_ellipse(const LandmarkSet& lm) {
  double x0 = 1e300, x1 = -1e300, chin = -1e300, brow = 0;
  for (int i = 0; i <= 16; ++i) {
    x0 = std::min(x0, lm[i].x);
    x1 = std::max(x1, lm[i].x);
    chin = std::max(chin, lm[i].y);
  }
  for (int i = 17; i <= 26; ++i) brow += lm[i].y / 10.0;
  const double top = brow - 0.75 * (chin - brow);
  Ellipse e;
  e.cx = 0.5 * (x0 + x1);
  e.cy = 0.5 * (top + chin);
  e.a = std::max(1.0, 0.5 * (x1 - x0) * 1.2);
  e.b = std::max(1.0, 0.5 * (chin - top) * 1.04);
  return e;
}

FaceMask HeadEllipseSegmenter::segment(const Image& img,
                                       const LandmarkSet& lm) const {
  const Ellipse head = head_ellipse(lm);
  FaceMask bg = make_mask(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      bg.at(0, y, x) = 1.0 - head.membership(x, y, 0.5);
    }
  }
  return bg;
}

}  // namespace morphforge::blend
