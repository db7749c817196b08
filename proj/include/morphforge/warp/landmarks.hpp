#pragma once

#include <filesystem>
#include <vector>

namespace morphforge::warp {

inline constexpr int kLandmarkCount = 68;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Ordered facial landmarks in pixel units (iBUG-68 layout when complete).
/// Pixel (x, y) has its centre at coordinate (x, y).
struct LandmarkSet {
  std::vector<Point2> points;

  std::size_t size() const { return points.size(); }
  const Point2& operator[](std::size_t i) const { return points[i]; }
  Point2& operator[](std::size_t i) { return points[i]; }

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

/// Throws DataError unless there are exactly 68 points inside [0,W)x[0,H).
void validate_landmarks(const LandmarkSet& set, int width, int height);

/// (1 - alpha) * a + alpha * b, pointwise. Mismatched counts raise
/// StructuralError; alpha outside [0,1] raises ConfigError.
LandmarkSet interpolate_landmarks(const LandmarkSet& a, const LandmarkSet& b,
                                  double alpha);

/// Sidecar format: one "x y" pair per line.
LandmarkSet load_landmarks(const std::filesystem::path& path);
void save_landmarks(const std::filesystem::path& path, const LandmarkSet& set);

/// The sidecar path that belongs to an image: same basename, ".txt".
std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

void validate_morph_factor(double alpha);

}  // namespace morphforge::warp
