#pragma once

#include <array>
#include <span>
#include <vector>

#include "morphforge/core/image.hpp"

namespace morphforge::eval {

/// Smallest tau with |{s > tau}| / n <= fmr. ConfigError unless 0 < fmr < 1,
/// DataError on an empty or non-finite calibration set.
double threshold_at_fmr(std::span<const double> non_mated, double fmr);

/// One row per morph: its similarity scores against each contributing subject.
struct ScoreMatrix {
  std::vector<std::vector<double>> mated;
};

/// Fraction of morphs whose weakest mated score is strictly above tau.
double mmpmr(const ScoreMatrix& scores, double tau);

inline constexpr std::array<double, 4> kOperatingPoints = {0.01, 0.05, 0.10, 0.20};

/// Higher score = more attack-like. APCER(t) = frac(attack <= t),
/// BPCER(t) = frac(bona_fide > t), t over {-inf} U scores U midpoints.
/// EER is (APCER + BPCER) / 2 at the t minimising |APCER - BPCER|; among equal
/// gaps the smallest such rate wins, at its lowest threshold.
struct MadRates {
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::array<double, 4> apcer_at_bpcer{};  // at kOperatingPoints
  std::array<double, 4> bpcer_at_apcer{};
  bool degenerate = false;  // identical score multisets; eer fixed at 0.5
};

MadRates mad_rates(std::span<const double> bona_fide, std::span<const double> attack);

/// Frechet distance between Gaussians fitted to two feature sets (rows are
/// samples). Unbiased covariances; the matrix square root goes through a
/// symmetric eigendecomposition with negative eigenvalues clipped to 0.
double fid(const std::vector<std::vector<double>>& a,
           const std::vector<std::vector<double>>& b);

/// Mean SSIM over channels and valid 11x11 Gaussian (sigma 1.5) windows,
/// C1 = 0.01^2, C2 = 0.03^2. Images smaller than 11 px use the largest odd
/// window that fits.
double ssim(const Image& a, const Image& b);

/// 10 log10(1 / MSE); +infinity when the images are identical.
double psnr(const Image& a, const Image& b);

}  // namespace morphforge::eval
