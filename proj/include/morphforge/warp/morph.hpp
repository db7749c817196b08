#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "morphforge/core/image.hpp"
#include "morphforge/warp/landmarks.hpp"
#include "morphforge/warp/warp.hpp"

namespace morphforge::warp {

/// Source of 68-point landmarks for an image identified by `name`.
class LandmarkDetector {
 public:
  virtual ~LandmarkDetector() = default;
  virtual LandmarkSet detect(const Image& img, const std::string& name) const = 0;
};

/// Reads the sidecar text file next to the image path given as `name`.
class SidecarLandmarkDetector : public LandmarkDetector {
 public:
  LandmarkSet detect(const Image& img, const std::string& name) const override;
};

/// In-memory lookup by name.
class TableLandmarkDetector : public LandmarkDetector {
 public:
  void add(const std::string& name, LandmarkSet set) {
    table_[name] = std::move(set);
  }
  LandmarkSet detect(const Image& img, const std::string& name) const override;

 private:
  std::map<std::string, LandmarkSet> table_;
};

struct LandmarkMorph {
  Image image;
  LandmarkSet landmarks;  // the interpolated landmarks the morph is aligned to
  WarpReport report;
};

/// (1 - alpha) * warp(i1 -> avg) + alpha * warp(i2 -> avg) with
/// avg = interpolate_landmarks(l1, l2, alpha).
LandmarkMorph landmark_morph(const Image& i1, const LandmarkSet& l1,
                             const Image& i2, const LandmarkSet& l2,
                             double alpha);

/// Same, detecting landmarks first; detection failures raise DataError naming
/// the failing input.
LandmarkMorph landmark_morph(const Image& i1, const std::string& name1,
                             const Image& i2, const std::string& name2,
                             double alpha, const LandmarkDetector& detector);

}  // namespace morphforge::warp
