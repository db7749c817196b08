#pragma once

#include <array>
#include <string>
#include <vector>

#include "morphforge/core/image.hpp"
#include "morphforge/nn/var.hpp"
#include "morphforge/warp/landmarks.hpp"

namespace morphforge::blend {

inline constexpr std::array<const char*, 5> kFaceComponents = {
    "skin", "eyes", "nose", "eyebrows", "mouth"};

/// L x H x W per-component probabilities with channel labels.
struct ParserOutput {
  nn::Var probs;
  std::vector<std::string> labels;
};

class FaceParser {
 public:
  virtual ~FaceParser() = default;
  virtual ParserOutput parse(const nn::Var& img,
                             const warp::LandmarkSet& landmarks) const = 0;
};

struct GeometricParserConfig {
  double gate_sharpness = 20.0;  // kappa
  double gate_offset = 0.15;     // delta, in RGB distance units
  double edge_softness = 0.5;    // pixels
};

/// Component maps from landmark ellipses (eyes, brows, nose, mouth) and the
/// hull of the jaw and brows (skin), each multiplied by the photometric gate
/// sigmoid(kappa * (|I(p) - b| - delta)) where b is the mean border colour.
/// The gate, b included, is differentiable in the pixels.
class GeometricParser : public FaceParser {
 public:
  explicit GeometricParser(GeometricParserConfig cfg = {}) : cfg_(cfg) {}
  ParserOutput parse(const nn::Var& img,
                     const warp::LandmarkSet& landmarks) const override;

  /// The landmark-only part: 5 x H x W, channels in kFaceComponents order.
  Tensor geometric_maps(const warp::LandmarkSet& landmarks, int height,
                        int width) const;

 private:
  GeometricParserConfig cfg_;
};

/// Sum of the five component channels, clamped to [0, 1]. ConfigError naming
/// a missing channel.
nn::Var face_mask(const ParserOutput& parsed);

/// Portrait segmentation: 1 on background, 0 on the person.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual FaceMask segment(const Image& img,
                           const warp::LandmarkSet& landmarks) const = 0;
};

/// Background = complement of a soft head ellipse spanning the jaw width and
/// reaching above the brows.
class HeadEllipseSegmenter : public Segmenter {
 public:
  FaceMask segment(const Image& img,
                   const warp::LandmarkSet& landmarks) const override;
};

/// Soft ellipse membership: sigmoid(signed distance / softness).
struct Ellipse {
  double cx = 0, cy = 0, a = 1, b = 1;
  double membership(double x, double y, double softness) const;
};

/// Head ellipse used by HeadEllipseSegmenter (also used to draw toy hair).
Ellipse head_ellipse(const warp::LandmarkSet& landmarks);

}  // namespace morphforge::blend
