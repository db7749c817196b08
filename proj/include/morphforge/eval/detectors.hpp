#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "morphforge/core/image.hpp"
#include "morphforge/nn/encoder.hpp"

namespace morphforge::eval {

inline constexpr int kFidFeatureDim = 64;

/// Seeded random conv features (dimension 64, unnormalised) used for FID.
class FidFeatures {
 public:
  explicit FidFeatures(std::uint64_t seed);
  std::vector<double> operator()(const Image& img) const;
  std::vector<std::vector<double>> operator()(const std::vector<Image>& imgs) const;

 private:
  nn::RandomConvEncoder encoder_;
};

inline constexpr int kMadFeatureCount = 8;

/// Per-channel mean and std, mean |Laplacian|, mean gradient magnitude.
std::array<double, kMadFeatureCount> image_statistics(const Image& img);

/// Toy single-image MAD: logistic regression on image_statistics, trained by
/// full-batch gradient descent on standardised features. Score is the attack
/// probability (higher = more attack-like).
class ToyMad {
 public:
  void train(const std::vector<Image>& bona_fide, const std::vector<Image>& attack,
             int iterations = 2000, double learning_rate = 0.5, double l2 = 1e-3);
  double score(const Image& img) const;
  std::vector<double> score(const std::vector<Image>& imgs) const;
  bool trained() const { return trained_; }

 private:
  std::array<double, kMadFeatureCount> mean_{}, scale_{}, w_{};
  double bias_ = 0.0;
  bool trained_ = false;
};

}  // namespace morphforge::eval
