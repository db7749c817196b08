#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "morphforge/core/image.hpp"
#include "morphforge/warp/landmarks.hpp"

namespace morphforge::pipeline {

using Rgb = std::array<double, 3>;

/// Parameters of one procedural identity. Colours are RGB in [0, 1]; shape
/// factors are relative to the canonical face template.
struct ToyIdentity {
  std::string id;
  Rgb skin, hair, background, iris, lips, brows;
  double face_width = 1.0;
  double face_height = 1.0;
  double eye_spacing = 0.0;  // outward shift of eyes and brows, unit coords
  double eye_size = 1.0;
  double nose_length = 1.0;
  double mouth_width = 1.0;
  double brow_raise = 0.0;
};

/// Deterministic in (seed, index). Background colours are cool and skin tones
/// warm, so the two never coincide.
ToyIdentity make_toy_identity(std::uint64_t seed, int index);

struct ToyFace {
  Image image;
  warp::LandmarkSet landmarks;
};

/// Renders one capture of `identity`: pose jitter (rotation, scale, shift),
/// illumination gain and mild sensor noise drawn from `capture_seed`.
/// jitter = 0 gives the frontal, noise-free rendering.
ToyFace render_toy_face(const ToyIdentity& identity, int resolution,
                        std::uint64_t capture_seed, double jitter = 1.0);

/// Identity-specific landmarks in unit coordinates, before pose jitter.
warp::LandmarkSet identity_shape(const ToyIdentity& identity);

}  // namespace morphforge::pipeline
