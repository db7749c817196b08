#pragma once

#include <array>
#include <string>

#include "morphforge/core/image.hpp"
#include "morphforge/nn/ops.hpp"
#include "morphforge/warp/landmarks.hpp"

namespace morphforge::gan {

enum class Region { kEyeL = 0, kEyeR, kNose, kMouth, kBackground, kHair };

inline constexpr int kRegionCount = 6;
inline constexpr int kFacialRegionCount = 4;
inline constexpr std::array<Region, kRegionCount> kAllRegions = {
    Region::kEyeL, Region::kEyeR,       Region::kNose,
    Region::kMouth, Region::kBackground, Region::kHair};

const char* region_name(Region r);
bool is_facial(Region r);
/// Number of down/up blocks of the local U-Net for this region.
int region_depth(Region r);

struct RegionSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const RegionSize&, const RegionSize&) = default;
};

struct RegionTable {
  std::array<RegionSize, kRegionCount> sizes;

  RegionSize& operator[](Region r) { return sizes[static_cast<int>(r)]; }
  const RegionSize& operator[](Region r) const {
    return sizes[static_cast<int>(r)];
  }
  friend bool operator==(const RegionTable&, const RegionTable&) = default;
};

/// Sizes at 256 (eyes 64x64, nose 64x80, mouth 96x64, width x height;
/// bg/hair full frame) scaled to `resolution` and rounded up to a multiple
/// of 2^depth of the region's net.
RegionTable default_region_table(int resolution);

/// ConfigError if a size is not divisible by 2^depth or exceeds the frame.
void validate_region_table(const RegionTable& table, int resolution);

using RegionCenters = std::array<warp::Point2, kFacialRegionCount>;

/// Eye centres: means of points 36-41 and 42-47; nose: tip (30);
/// mouth: mean of the outer lip 48-59.
RegionCenters region_centers(const warp::LandmarkSet& landmarks);

struct RegionPatch {
  Tensor patch;
  warp::Point2 center;
  RegionSize size;
  nn::Placement placement;
  /// Shift applied when clamping the crop inside the frame.
  int clamp_dx = 0;
  int clamp_dy = 0;
};

struct RegionPatchSet {
  std::array<RegionPatch, kRegionCount> patches;
  FaceMask bg_mask;
  FaceMask hair_mask;

  RegionPatch& operator[](Region r) { return patches[static_cast<int>(r)]; }
  const RegionPatch& operator[](Region r) const {
    return patches[static_cast<int>(r)];
  }
};

/// top = round(cy - h/2), left = round(cx - w/2), clamped to the frame.
nn::Placement crop_placement(const warp::Point2& center, RegionSize size,
                             int width, int height, int* dx = nullptr,
                             int* dy = nullptr);

/// hair = clamp(1 - face - bg).
FaceMask hair_mask(const FaceMask& face_mask, const FaceMask& bg_mask);

/// Facial patches are cropped at region_centers(landmarks); bg = img * bg
/// mask; hair = img * hair mask, all full frame.
RegionPatchSet extract_regions(const Image& img,
                               const warp::LandmarkSet& landmarks,
                               const FaceMask& bg_mask,
                               const FaceMask& face_mask,
                               const RegionTable& table);

Tensor average_patch(const Tensor& p1, const Tensor& p2, double alpha);

/// Patch-wise average of two contributors' regions; placements, centres and
/// masks are taken from `placement_source` (the interpolated face).
RegionPatchSet average_regions(const RegionPatchSet& r1,
                               const RegionPatchSet& r2, double alpha,
                               const RegionPatchSet& placement_source);

}  // namespace morphforge::gan
