#include "morphforge/eval/detectors.hpp"

#include <cmath>

#include "morphforge/core/error.hpp"
#include "morphforge/nn/var.hpp"

namespace morphforge::eval {

namespace {

nn::EncoderConfig fid_config(std::uint64_t seed) {
  nn::EncoderConfig cfg;
  cfg.seed = seed * 7919 + 307;
  cfg.out_dim = kFidFeatureDim;
  cfg.widths = {16, 32, 32};
  cfg.normalize = false;
  return cfg;
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

FidFeatures::FidFeatures(std::uint64_t seed) : encoder_(fid_config(seed)) {}

std::vector<double> FidFeatures::operator()(const Image& img) const {
  nn::NoGradGuard guard;
  const auto out = encoder_(nn::constant(img)).value();
  return {out.data(), out.data() + out.size()};
}

std::vector<std::vector<double>> FidFeatures::operator()(const std::vector<Image>& imgs) const {
  std::vector<std::vector<double>> out;
  out.reserve(imgs.size());
  for (const auto& img : imgs) out.push_back((*this)(img));
  return out;
}

std::array<double, kMadFeatureCount> image_statistics(const Image& img) {
  require_image(img, "mad input");
  std::array<double, kMadFeatureCount> f{};
  const int h = img.height(), w = img.width();
  const double n = static_cast<double>(img.plane());
  for (int c = 0; c < 3; ++c) {
    double s = 0.0, s2 = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = img.at(c, y, x);
        s += v;
        s2 += v * v;
      }
    }
    const double mu = s / n;
    f[c] = mu;
    f[3 + c] = std::sqrt(std::max(0.0, s2 / n - mu * mu));
  }
  double lap = 0.0, grad = 0.0;
  int count = 0;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = img.at(c, y, x);
        lap += std::abs(img.at(c, y - 1, x) + img.at(c, y + 1, x) + img.at(c, y, x - 1) +
                        img.at(c, y, x + 1) - 4 * v);
        const double gx = img.at(c, y, x + 1) - v;
        const double gy = img.at(c, y + 1, x) - v;
        grad += std::sqrt(gx * gx + gy * gy);
        ++count;
      }
    }
  }
  f[6] = count ? lap / count : 0.0;
  f[7] = count ? grad / count : 0.0;
  return f;
}

void ToyMad::train(const std::vector<Image>& bona_fide, const std::vector<Image>& attack,
                   int iterations, double learning_rate, double l2) {
  if (bona_fide.empty() || attack.empty()) {
    throw DataError("toy MAD training needs bona fide and attack images");
  }
  std::vector<std::array<double, kMadFeatureCount>> xs;
  std::vector<double> ys;
  for (const auto& img : bona_fide) {
    xs.push_back(image_statistics(img));
    ys.push_back(0.0);
  }
  for (const auto& img : attack) {
    xs.push_back(image_statistics(img));
    ys.push_back(1.0);
  }
  const double n = static_cast<double>(xs.size());
  for (int j = 0; j < kMadFeatureCount; ++j) {
    double s = 0.0, s2 = 0.0;
    for (const auto& x : xs) {
      s += x[j];
      s2 += x[j] * x[j];
    }
    mean_[j] = s / n;
    const double sd = std::sqrt(std::max(0.0, s2 / n - mean_[j] * mean_[j]));
    scale_[j] = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  for (auto& x : xs) {
    for (int j = 0; j < kMadFeatureCount; ++j) x[j] = (x[j] - mean_[j]) * scale_[j];
  }
  w_.fill(0.0);
  bias_ = 0.0;
  for (int it = 0; it < iterations; ++it) {
    std::array<double, kMadFeatureCount> gw{};
    double gb = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double z = bias_;
      for (int j = 0; j < kMadFeatureCount; ++j) z += w_[j] * xs[i][j];
      const double r = sigmoid(z) - ys[i];
      for (int j = 0; j < kMadFeatureCount; ++j) gw[j] += r * xs[i][j];
      gb += r;
    }
    for (int j = 0; j < kMadFeatureCount; ++j) {
      w_[j] -= learning_rate * (gw[j] / n + l2 * w_[j]);
    }
    bias_ -= learning_rate * gb / n;
  }
  trained_ = true;
}

double ToyMad::score(const Image& img) const {
  if (!trained_) throw ConfigError("toy MAD used before training");
  const auto f = image_statistics(img);
  double z = bias_;
  for (int j = 0; j < kMadFeatureCount; ++j) z += w_[j] * (f[j] - mean_[j]) * scale_[j];
  return sigmoid(z);
}

std::vector<double> ToyMad::score(const std::vector<Image>& imgs) const {
  std::vector<double> out;
  out.reserve(imgs.size());
  for (const auto& img : imgs) out.push_back(score(img));
  return out;
}

}  // namespace morphforge::eval
