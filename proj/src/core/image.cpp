#include "morphforge/core/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "morphforge/core/error.hpp"

namespace morphforge {

Image make_image(int height, int width, double fill) {
  return Tensor(3, height, width, fill);
}

FaceMask make_mask(int height, int width, double fill) {
  return Tensor(1, height, width, fill);
}

void require_image(const Image& img, const char* what, int resolution) {
  if (img.channels() != 3) {
    throw StructuralError(std::string(what) + ": expected 3 channels, got " +
                          img.shape_string());
  }
  if (resolution > 0 &&
      (img.height() != resolution || img.width() != resolution)) {
    throw StructuralError(std::string(what) + ": expected " +
                          std::to_string(resolution) + "x" +
                          std::to_string(resolution) + ", got " +
                          img.shape_string());
  }
}

void require_mask_for(const FaceMask& mask, const Image& img,
                      const char* what) {
  if (mask.channels() != 1 || mask.height() != img.height() ||
      mask.width() != img.width()) {
    throw StructuralError(std::string(what) + ": mask " + mask.shape_string() +
                          " does not match image " + img.shape_string());
  }
}

void clamp01(Tensor& t) {
  for (double& v : t.values()) v = std::clamp(v, 0.0, 1.0);
}

Tensor clamped01(Tensor t) {
  clamp01(t);
  return t;
}

unsigned char to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::floor(c * 255.0 + 0.5));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct Raw {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<unsigned char> bytes;
};

Raw read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw DataError("cannot open image " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError("not a PNG file: " + path.string());
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng initialisation failed");
  }
  Raw raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.bytes.resize(stride * raw.height);
  std::vector<png_bytep> rows(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = raw.bytes.data() + y * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return raw;
}

void write_png(const std::filesystem::path& path, int width, int height,
               int channels, const std::vector<unsigned char>& bytes) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw DataError("cannot write image " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed writing PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image load_png(const std::filesystem::path& path) {
  const Raw raw = read_png(path);
  Image img = make_image(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const unsigned char* px =
          raw.bytes.data() +
          (static_cast<std::size_t>(y) * raw.width + x) * raw.channels;
      for (int c = 0; c < 3; ++c) {
        const int src = raw.channels >= 3 ? c : 0;
        img.at(c, y, x) = px[src] / 255.0;
      }
    }
  }
  return img;
}

void save_png(const std::filesystem::path& path, const Image& img) {
  require_image(img, "save_png");
  std::vector<unsigned char> bytes(img.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        bytes[(static_cast<std::size_t>(y) * img.width() + x) * 3 + c] =
            to_byte(img.at(c, y, x));
      }
    }
  }
  write_png(path, img.width(), img.height(), 3, bytes);
}

FaceMask load_mask_png(const std::filesystem::path& path) {
  const Raw raw = read_png(path);
  FaceMask mask = make_mask(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      mask.at(0, y, x) =
          raw.bytes[(static_cast<std::size_t>(y) * raw.width + x) *
                    raw.channels] /
          255.0;
    }
  }
  return mask;
}

void save_mask_png(const std::filesystem::path& path, const FaceMask& mask) {
  if (mask.channels() != 1) {
    throw StructuralError("save_mask_png: expected 1 channel, got " +
                          mask.shape_string());
  }
  std::vector<unsigned char> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = to_byte(mask[i]);
  write_png(path, mask.width(), mask.height(), 1, bytes);
}

}  // namespace morphforge
