#include "morphforge/warp/landmarks.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "morphforge/core/error.hpp"

namespace morphforge::warp {

void validate_landmarks(const LandmarkSet& set, int width, int height) {
  if (set.size() != kLandmarkCount) {
    throw DataError("expected " + std::to_string(kLandmarkCount) +
                    " landmarks, got " + std::to_string(set.size()));
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Point2& p = set[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 ||
        p.y < 0.0 || p.x >= width || p.y >= height) {
      throw DataError("landmark " + std::to_string(i) + " at (" +
                      std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") lies outside the " + std::to_string(width) + "x" +
                      std::to_string(height) + " frame");
    }
  }
}

void validate_morph_factor(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("morph factor must lie in [0,1], got " +
                      std::to_string(alpha));
  }
}

LandmarkSet interpolate_landmarks(const LandmarkSet& a, const LandmarkSet& b,
                                  double alpha) {
  if (a.size() != b.size()) {
    throw StructuralError("interpolate_landmarks: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + " points");
  }
  validate_morph_factor(alpha);
  LandmarkSet out;
  out.points.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i].x = (1.0 - alpha) * a[i].x + alpha * b[i].x;
    out[i].y = (1.0 - alpha) * a[i].y + alpha * b[i].y;
  }
  return out;
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open landmark file " + path.string());
  LandmarkSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Point2 p;
    if (!(ls >> p.x >> p.y)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected 'x y'");
    }
    set.points.push_back(p);
  }
  if (set.size() != kLandmarkCount) {
    throw DataError(path.string() + ": expected " +
                    std::to_string(kLandmarkCount) + " landmarks, got " +
                    std::to_string(set.size()));
  }
  return set;
}

void save_landmarks(const std::filesystem::path& path, const LandmarkSet& set) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write landmark file " + path.string());
  char buf[64];
  for (const Point2& p : set.points) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g\n", p.x, p.y);
    out << buf;
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  std::filesystem::path p = image_path;
  p.replace_extension(".txt");
  return p;
}

}  // namespace morphforge::warp
