#include "morphforge/gan/regions.hpp"

#include <algorithm>
#include <cmath>

#include "morphforge/core/error.hpp"

namespace morphforge::gan {

const char* region_name(Region r) {
  switch (r) {
    case Region::kEyeL: return "eye_l";
    case Region::kEyeR: return "eye_r";
    case Region::kNose: return "nose";
    case Region::kMouth: return "mouth";
    case Region::kBackground: return "bg";
    case Region::kHair: return "hair";
  }
  return "?";
}

bool is_facial(Region r) { return static_cast<int>(r) < kFacialRegionCount; }

int region_depth(Region r) { return is_facial(r) ? 3 : 4; }

namespace {

int round_up(int v, int multiple) {
  return (v + multiple - 1) / multiple * multiple;
}

int scaled(int at256, int resolution, int multiple) {
  const int raw = static_cast<int>(std::ceil(at256 * resolution / 256.0));
  return std::max(multiple, round_up(raw, multiple));
}

}  // namespace

RegionTable default_region_table(int resolution) {
  if (resolution <= 0) throw ConfigError("resolution must be positive");
  RegionTable t;
  const int m = 1 << region_depth(Region::kEyeL);
  t[Region::kEyeL] = {scaled(64, resolution, m), scaled(64, resolution, m)};
  t[Region::kEyeR] = t[Region::kEyeL];
  t[Region::kNose] = {scaled(64, resolution, m), scaled(80, resolution, m)};
  t[Region::kMouth] = {scaled(96, resolution, m), scaled(64, resolution, m)};
  t[Region::kBackground] = {resolution, resolution};
  t[Region::kHair] = {resolution, resolution};
  return t;
}

void validate_region_table(const RegionTable& table, int resolution) {
  for (Region r : kAllRegions) {
    const RegionSize s = table[r];
    const int m = 1 << region_depth(r);
    if (s.width <= 0 || s.height <= 0 || s.width % m != 0 ||
        s.height % m != 0) {
      throw ConfigError(std::string("region ") + region_name(r) + " size " +
                        std::to_string(s.width) + "x" +
                        std::to_string(s.height) +
                        " is not a positive multiple of " + std::to_string(m));
    }
    if (s.width > resolution || s.height > resolution) {
      throw ConfigError(std::string("region ") + region_name(r) +
                        " is larger than the frame");
    }
    if (!is_facial(r) && (s.width != resolution || s.height != resolution)) {
      throw ConfigError(std::string("region ") + region_name(r) +
                        " must cover the full frame");
    }
  }
}

RegionCenters region_centers(const warp::LandmarkSet& landmarks) {
  if (landmarks.size() != warp::kLandmarkCount) {
    throw StructuralError("region_centers expects 68 landmarks");
  }
  auto mean_of = [&](int first, int last) {
    warp::Point2 m;
    for (int i = first; i <= last; ++i) {
      m.x += landmarks[i].x;
      m.y += landmarks[i].y;
    }
    const double n = last - first + 1;
    return warp::Point2{m.x / n, m.y / n};
  };
  return {mean_of(36, 41), mean_of(42, 47), landmarks[30], mean_of(48, 59)};
}

nn::Placement crop_placement(const warp::Point2& center, RegionSize size,
                             int width, int height, int* dx, int* dy) {
  const int top = static_cast<int>(std::lround(center.y - size.height / 2.0));
  const int left = static_cast<int>(std::lround(center.x - size.width / 2.0));
  const int ct = std::clamp(top, 0, height - size.height);
  const int cl = std::clamp(left, 0, width - size.width);
  if (dx) *dx = cl - left;
  if (dy) *dy = ct - top;
  return {ct, cl};
}

FaceMask hair_mask(const FaceMask& face_mask, const FaceMask& bg_mask) {
  require_same_shape(face_mask, bg_mask, "hair_mask");
  FaceMask h = face_mask;
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = std::clamp(1.0 - face_mask[i] - bg_mask[i], 0.0, 1.0);
  }
  return h;
}

namespace {

Tensor masked(const Image& img, const FaceMask& mask) {
  Tensor out = img;
  const int plane = img.plane();
  for (int c = 0; c < img.channels(); ++c) {
    for (int i = 0; i < plane; ++i) out[c * plane + i] *= mask[i];
  }
  return out;
}

}  // namespace

RegionPatchSet extract_regions(const Image& img,
                               const warp::LandmarkSet& landmarks,
                               const FaceMask& bg_mask,
                               const FaceMask& face_mask,
                               const RegionTable& table) {
  require_image(img, "extract_regions");
  require_mask_for(bg_mask, img, "extract_regions");
  require_mask_for(face_mask, img, "extract_regions");
  validate_region_table(table, std::min(img.width(), img.height()));
  RegionPatchSet set;
  const RegionCenters centers = region_centers(landmarks);
  for (int i = 0; i < kFacialRegionCount; ++i) {
    const Region r = kAllRegions[i];
    RegionPatch& p = set[r];
    p.center = centers[i];
    p.size = table[r];
    p.placement = crop_placement(p.center, p.size, img.width(), img.height(),
                                 &p.clamp_dx, &p.clamp_dy);
    p.patch = Tensor(3, p.size.height, p.size.width);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < p.size.height; ++y) {
        for (int x = 0; x < p.size.width; ++x) {
          p.patch.at(c, y, x) =
              img.at(c, p.placement.top + y, p.placement.left + x);
        }
      }
    }
  }
  set.bg_mask = bg_mask;
  set.hair_mask = hair_mask(face_mask, bg_mask);
  const warp::Point2 frame_center{(img.width() - 1) / 2.0,
                                  (img.height() - 1) / 2.0};
  for (Region r : {Region::kBackground, Region::kHair}) {
    RegionPatch& p = set[r];
    p.center = frame_center;
    p.size = table[r];
    p.placement = {0, 0};
    p.patch = masked(img, r == Region::kBackground ? set.bg_mask
                                                   : set.hair_mask);
  }
  return set;
}

Tensor average_patch(const Tensor& p1, const Tensor& p2, double alpha) {
  require_same_shape(p1, p2, "average_patch");
  Tensor out = p1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::lerp(p1[i], p2[i], alpha);
  }
  return out;
}

RegionPatchSet average_regions(const RegionPatchSet& r1,
                               const RegionPatchSet& r2, double alpha,
                               const RegionPatchSet& placement_source) {
  RegionPatchSet out = placement_source;
  for (Region r : kAllRegions) {
    out[r].patch = average_patch(r1[r].patch, r2[r].patch, alpha);
  }
  return out;
}

}  // namespace morphforge::gan
