#include "morphforge/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "morphforge/core/error.hpp"

namespace morphforge {

Tensor::Tensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) {
    throw StructuralError("negative tensor dimension");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

std::string Tensor::shape_string() const {
  return std::to_string(channels_) + "x" + std::to_string(height_) + "x" +
         std::to_string(width_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Tensor::min_value() const {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double Tensor::max_value() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double Tensor::mean() const {
  if (data_.empty()) return 0.0;
  return std::accumulate(data_.begin(), data_.end(), 0.0) /
         static_cast<double>(data_.size());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw StructuralError(std::string(what) + ": shape mismatch " +
                          a.shape_string() + " vs " + b.shape_string());
  }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace morphforge
