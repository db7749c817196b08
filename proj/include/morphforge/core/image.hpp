#pragma once

#include <filesystem>

#include "morphforge/core/tensor.hpp"

namespace morphforge {

/// 3 x H x W intensities in [0, 1].
using Image = Tensor;

/// 1 x H x W soft mask in [0, 1].
using FaceMask = Tensor;

Image make_image(int height, int width, double fill = 0.0);
FaceMask make_mask(int height, int width, double fill = 0.0);

/// Throws StructuralError if `img` is not a 3-channel image of the given size
/// (size check skipped when resolution <= 0).
void require_image(const Image& img, const char* what, int resolution = 0);
void require_mask_for(const FaceMask& mask, const Image& img, const char* what);

void clamp01(Tensor& t);
Tensor clamped01(Tensor t);

/// 8-bit RGB PNG -> [0,1]. Grey and RGBA inputs are converted.
Image load_png(const std::filesystem::path& path);
/// Writes 8-bit RGB, rounding half-up after clamping to [0,1].
void save_png(const std::filesystem::path& path, const Image& img);

FaceMask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const FaceMask& mask);

/// Quantisation used by the PNG writer: floor(v * 255 + 0.5) after clamping.
unsigned char to_byte(double v);

}  // namespace morphforge
