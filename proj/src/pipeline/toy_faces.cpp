#include "morphforge/pipeline/toy_faces.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "morphforge/blend/parser.hpp"
#include "morphforge/warp/face_template.hpp"

namespace morphforge::pipeline {

using warp::LandmarkSet;
using warp::Point2;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Point2 mean_of(const LandmarkSet& lm, int first, int last) {
  Point2 c;
  for (int i = first; i <= last; ++i) {
    c.x += lm[i].x;
    c.y += lm[i].y;
  }
  const double n = last - first + 1;
  return {c.x / n, c.y / n};
}

double segment_distance(double px, double py, const Point2& a, const Point2& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

// Anti-aliased coverage of a closed polygon (even-odd rule), 1 px ramp.
double polygon_coverage(double px, double py, const std::vector<Point2>& poly) {
  bool inside = false;
  double d = 1e300;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if ((a.y > py) != (b.y > py) && px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
    d = std::min(d, segment_distance(px, py, a, b));
  }
  return std::clamp(0.5 + (inside ? d : -d), 0.0, 1.0);
}

double polyline_coverage(double px, double py, const LandmarkSet& lm, int first, int last,
                         double radius) {
  double d = 1e300;
  for (int i = first; i < last; ++i) d = std::min(d, segment_distance(px, py, lm[i], lm[i + 1]));
  return std::clamp(0.5 + radius - d, 0.0, 1.0);
}

std::vector<Point2> ring(const LandmarkSet& lm, int first, int last) {
  return {lm.points.begin() + first, lm.points.begin() + last + 1};
}

void paint(Rgb& px, const Rgb& colour, double coverage) {
  for (int c = 0; c < 3; ++c) px[c] = std::lerp(px[c], colour[c], coverage);
}

Rgb scaled(const Rgb& c, double s) { return {c[0] * s, c[1] * s, c[2] * s}; }

}  // namespace

ToyIdentity make_toy_identity(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x70f1u};
  std::mt19937_64 rng(seq);
  ToyIdentity id;
  char name[32];
  std::snprintf(name, sizeof name, "id%03d", index);
  id.id = name;
  const double r = uniform(rng, 0.62, 0.92);
  id.skin = {r, r * uniform(rng, 0.68, 0.84), r * uniform(rng, 0.52, 0.72)};
  id.background = {uniform(rng, 0.12, 0.40), uniform(rng, 0.30, 0.55), uniform(rng, 0.55, 0.85)};
  const double h = uniform(rng, 0.06, 0.45);
  id.hair = {h, h * uniform(rng, 0.6, 0.9), h * uniform(rng, 0.4, 0.7)};
  id.iris = {uniform(rng, 0.1, 0.45), uniform(rng, 0.15, 0.45), uniform(rng, 0.1, 0.5)};
  id.lips = {uniform(rng, 0.6, 0.85), uniform(rng, 0.22, 0.4), uniform(rng, 0.28, 0.45)};
  id.brows = scaled(id.hair, 0.8);
  id.face_width = uniform(rng, 0.9, 1.1);
  id.face_height = uniform(rng, 0.93, 1.05);
  id.eye_spacing = uniform(rng, -0.02, 0.02);
  id.eye_size = uniform(rng, 0.8, 1.25);
  id.nose_length = uniform(rng, 0.85, 1.15);
  id.mouth_width = uniform(rng, 0.85, 1.2);
  id.brow_raise = uniform(rng, -0.012, 0.015);
  return id;
}

LandmarkSet identity_shape(const ToyIdentity& id) {
  LandmarkSet lm = warp::unit_face_template();
  for (auto& p : lm.points) {
    p.x = 0.5 + (p.x - 0.5) * id.face_width;
    p.y = 0.5 + (p.y - 0.5) * id.face_height;
  }
  auto outward = [&](int first, int last) {
    for (int i = first; i <= last; ++i) lm[i].x += lm[i].x < 0.5 ? -id.eye_spacing : id.eye_spacing;
  };
  outward(17, 26);
  outward(36, 47);
  for (int i = 17; i <= 26; ++i) lm[i].y -= id.brow_raise;
  for (int first : {36, 42}) {
    const Point2 c = mean_of(lm, first, first + 5);
    for (int i = first; i < first + 6; ++i) {
      lm[i].x = c.x + (lm[i].x - c.x) * id.eye_size;
      lm[i].y = c.y + (lm[i].y - c.y) * id.eye_size;
    }
  }
  const double top = lm[27].y;
  for (int i = 28; i <= 35; ++i) lm[i].y = top + (lm[i].y - top) * id.nose_length;
  const Point2 mc = mean_of(lm, 48, 59);
  for (int i = 48; i <= 67; ++i) lm[i].x = mc.x + (lm[i].x - mc.x) * id.mouth_width;
  return lm;
}

ToyFace render_toy_face(const ToyIdentity& id, int resolution, std::uint64_t capture_seed,
                        double jitter) {
  std::mt19937_64 rng(capture_seed * 0x9E3779B97F4A7C15ull + 17);
  const double angle = jitter * uniform(rng, -0.04, 0.04);
  const double zoom = 1.0 + jitter * uniform(rng, -0.03, 0.03);
  const double tx = jitter * uniform(rng, -0.015, 0.015);
  const double ty = jitter * uniform(rng, -0.015, 0.015);
  const double gain = 1.0 + jitter * uniform(rng, -0.06, 0.06);
  const double noise_sd = 0.012 * std::min(1.0, jitter);

  ToyFace face;
  face.landmarks = identity_shape(id);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (auto& p : face.landmarks.points) {
    const double x = p.x - 0.5, y = p.y - 0.5;
    const double u = 0.5 + zoom * (ca * x - sa * y) + tx;
    const double v = 0.5 + zoom * (sa * x + ca * y) + ty;
    p = {u * resolution - 0.5, v * resolution - 0.5};
  }
  const LandmarkSet& lm = face.landmarks;
  const double r = resolution;

  const blend::Ellipse head = blend::head_ellipse(lm);
  std::vector<Point2> skin_poly = ring(lm, 0, 16);
  for (int i = 26; i >= 17; --i) skin_poly.push_back({lm[i].x, lm[i].y - 0.03 * r});
  const std::vector<Point2> outer_lips = ring(lm, 48, 59);
  const std::vector<Point2> inner_lips = ring(lm, 60, 67);
  const std::vector<Point2> nostrils = {lm[31], lm[30], lm[35], lm[33]};
  struct Eye {
    Point2 c;
    double a, b;
  };
  std::array<Eye, 2> eyes;
  for (int k = 0; k < 2; ++k) {
    const int f = 36 + 6 * k;
    eyes[k].c = mean_of(lm, f, f + 5);
    eyes[k].a = 0.5 * std::hypot(lm[f + 3].x - lm[f].x, lm[f + 3].y - lm[f].y);
    eyes[k].b = std::max(0.6, 0.5 * std::hypot(lm[f + 5].x - lm[f + 1].x, lm[f + 5].y - lm[f + 1].y));
  }
  const Point2 fc = mean_of(lm, 0, 16);
  const double face_r = 0.5 * std::hypot(lm[16].x - lm[0].x, lm[8].y - lm[19].y);

  face.image = make_image(resolution, resolution);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      Rgb px = scaled(id.background, 0.9 + 0.2 * y / r);
      paint(px, id.hair, head.membership(x, y, 0.5));
      const double dr = std::hypot(x - fc.x, y - fc.y) / face_r;
      paint(px, scaled(id.skin, 1.0 - 0.12 * dr * dr), polygon_coverage(x, y, skin_poly));
      const double brow_w = std::max(0.6, 0.014 * r);
      paint(px, id.brows,
            std::max(polyline_coverage(x, y, lm, 17, 21, brow_w),
                     polyline_coverage(x, y, lm, 22, 26, brow_w)));
      paint(px, scaled(id.skin, 0.88), polyline_coverage(x, y, lm, 27, 30, std::max(0.5, 0.008 * r)));
      paint(px, scaled(id.skin, 0.72), polygon_coverage(x, y, nostrils));
      for (const Eye& e : eyes) {
        const blend::Ellipse sclera{e.c.x, e.c.y, e.a, e.b};
        paint(px, {0.93, 0.93, 0.9}, sclera.membership(x, y, 0.5));
        const double ir = std::max(0.6, 0.55 * std::min(e.a, 1.6 * e.b));
        const blend::Ellipse iris{e.c.x, e.c.y, ir, std::min(ir, e.b)};
        paint(px, id.iris, iris.membership(x, y, 0.5));
      }
      paint(px, id.lips, polygon_coverage(x, y, outer_lips));
      paint(px, scaled(id.lips, 0.55), polygon_coverage(x, y, inner_lips));
      for (int c = 0; c < 3; ++c) {
        double v = px[c] * gain;
        if (noise_sd > 0) v += noise_sd * noise(rng);
        face.image.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  for (auto& p : face.landmarks.points) {
    p.x = std::clamp(p.x, 0.0, r - 1.0);
    p.y = std::clamp(p.y, 0.0, r - 1.0);
  }
  return face;
}

}  // namespace morphforge::pipeline
