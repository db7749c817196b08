#include "morphforge/warp/face_template.hpp"

#include <cmath>
#include <numbers>

namespace morphforge::warp {

namespace {

// Both eyes run left corner -> top -> right corner -> bottom in image space,
// which is the iBUG order (outer-first for 36, inner-first for 42).
void eye(LandmarkSet& s, int first, double cx, double cy) {
  constexpr double w = 0.10, h = 0.035;
  const double xs[6] = {-w / 2, -w / 6, w / 6, w / 2, w / 6, -w / 6};
  const double ys[6] = {0.0, -h, -h, 0.0, h, h};
  for (int i = 0; i < 6; ++i) s[first + i] = {cx + xs[i], cy + ys[i]};
}

}  // namespace

LandmarkSet unit_face_template() {
  LandmarkSet s;
  s.points.resize(kLandmarkCount);
  for (int i = 0; i <= 16; ++i) {
    const double t = std::numbers::pi * i / 16.0;
    s[i] = {0.5 - 0.30 * std::cos(t), 0.50 + 0.36 * std::sin(t)};
  }
  for (int i = 0; i < 5; ++i) {
    const double x = 0.27 + 0.045 * i;
    const double y = 0.37 - 0.025 * std::sin(std::numbers::pi * i / 4.0);
    s[17 + i] = {x, y};
    s[26 - i] = {1.0 - x, y};
  }
  for (int i = 0; i < 4; ++i) s[27 + i] = {0.5, 0.44 + 0.16 * i / 3.0};
  const double nx[5] = {0.44, 0.47, 0.5, 0.53, 0.56};
  const double ny[5] = {0.63, 0.64, 0.645, 0.64, 0.63};
  for (int i = 0; i < 5; ++i) s[31 + i] = {nx[i], ny[i]};
  eye(s, 36, 0.36, 0.45);
  eye(s, 42, 0.64, 0.45);
  const double ox[12] = {0.40, 0.433, 0.467, 0.5, 0.533, 0.567,
                         0.60, 0.567, 0.533, 0.5, 0.467, 0.433};
  const double oy[12] = {0.74, 0.715, 0.705, 0.71, 0.705, 0.715,
                         0.74, 0.77,  0.785, 0.79, 0.785, 0.77};
  for (int i = 0; i < 12; ++i) s[48 + i] = {ox[i], oy[i]};
  const double ix[8] = {0.42, 0.467, 0.5, 0.533, 0.58, 0.533, 0.5, 0.467};
  const double iy[8] = {0.74, 0.73, 0.732, 0.73, 0.74, 0.75, 0.752, 0.75};
  for (int i = 0; i < 8; ++i) s[60 + i] = {ix[i], iy[i]};
  return s;
}

LandmarkSet canonical_landmarks(int width, int height) {
  LandmarkSet s = unit_face_template();
  for (auto& p : s.points) {
    p.x = p.x * width - 0.5;
    p.y = p.y * height - 0.5;
  }
  return s;
}

}  // namespace morphforge::warp
