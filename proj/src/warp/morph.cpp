#include "morphforge/warp/morph.hpp"

#include "morphforge/core/error.hpp"
#include "morphforge/warp/delaunay.hpp"

namespace morphforge::warp {

LandmarkSet SidecarLandmarkDetector::detect(const Image& img,
                                            const std::string& name) const {
  LandmarkSet set = load_landmarks(sidecar_path(name));
  validate_landmarks(set, img.width(), img.height());
  return set;
}

LandmarkSet TableLandmarkDetector::detect(const Image& img,
                                          const std::string& name) const {
  const auto it = table_.find(name);
  if (it == table_.end()) throw DataError("no landmarks for " + name);
  validate_landmarks(it->second, img.width(), img.height());
  return it->second;
}

LandmarkMorph landmark_morph(const Image& i1, const LandmarkSet& l1,
                             const Image& i2, const LandmarkSet& l2,
                             double alpha) {
  require_image(i1, "landmark_morph");
  require_same_shape(i1, i2, "landmark_morph");
  if (i1.height() != i1.width()) {
    throw StructuralError("landmark_morph expects square aligned images");
  }
  validate_landmarks(l1, i1.width(), i1.height());
  validate_landmarks(l2, i2.width(), i2.height());
  LandmarkMorph result;
  result.landmarks = interpolate_landmarks(l1, l2, alpha);
  const TriangleMesh mesh = triangulate(result.landmarks, i1.width());
  const Image w1 = warp_to(i1, l1, result.landmarks, mesh, &result.report);
  const Image w2 = warp_to(i2, l2, result.landmarks, mesh, &result.report);
  result.image = make_image(i1.height(), i1.width());
  for (std::size_t i = 0; i < w1.size(); ++i) {
    result.image[i] = (1.0 - alpha) * w1[i] + alpha * w2[i];
  }
  clamp01(result.image);
  return result;
}

LandmarkMorph landmark_morph(const Image& i1, const std::string& name1,
                             const Image& i2, const std::string& name2,
                             double alpha, const LandmarkDetector& detector) {
  auto detect = [&](const Image& img, const std::string& name) {
    try {
      return detector.detect(img, name);
    } catch (const Error& e) {
      throw DataError("landmark detection failed for " + name + ": " +
                      e.what());
    }
  };
  const LandmarkSet l1 = detect(i1, name1);
  const LandmarkSet l2 = detect(i2, name2);
  return landmark_morph(i1, l1, i2, l2, alpha);
}

}  // namespace morphforge::warp
