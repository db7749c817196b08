#include "morphforge/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "morphforge/core/error.hpp"

namespace morphforge::eval {

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw StructuralError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                          b.shape_string());
  }
}

void require_finite(std::span<const double> s, const char* what) {
  for (double v : s) {
    if (!std::isfinite(v)) throw DataError(std::string("non-finite score in ") + what);
  }
}

}  // namespace

double threshold_at_fmr(std::span<const double> non_mated, double fmr) {
  if (!(fmr > 0.0 && fmr < 1.0)) throw ConfigError("fmr must lie in (0, 1)");
  if (non_mated.empty()) throw DataError("calibration score set is empty");
  require_finite(non_mated, "calibration scores");
  std::vector<double> s(non_mated.begin(), non_mated.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  const std::size_t n = s.size();
  // Largest k with k / n <= fmr.
  std::size_t k = static_cast<std::size_t>(std::floor(fmr * n));
  while (k + 1 <= n && static_cast<double>(k + 1) / n <= fmr) ++k;
  while (k > 0 && static_cast<double>(k) / n > fmr) --k;
  return s[k];
}

double mmpmr(const ScoreMatrix& scores, double tau) {
  if (scores.mated.empty()) throw DataError("mmpmr: no morphs");
  std::size_t hits = 0;
  for (const auto& row : scores.mated) {
    if (row.empty()) throw DataError("mmpmr: morph without mated scores");
    require_finite(row, "mated scores");
    if (*std::min_element(row.begin(), row.end()) > tau) ++hits;
  }
  return static_cast<double>(hits) / scores.mated.size();
}

MadRates mad_rates(std::span<const double> bona_fide, std::span<const double> attack) {
  if (bona_fide.empty() || attack.empty()) {
    throw DataError("mad_rates needs bona fide and attack scores");
  }
  require_finite(bona_fide, "bona fide scores");
  require_finite(attack, "attack scores");
  std::vector<double> bona(bona_fide.begin(), bona_fide.end());
  std::vector<double> att(attack.begin(), attack.end());
  std::sort(bona.begin(), bona.end());
  std::sort(att.begin(), att.end());

  std::vector<double> merged = bona;
  merged.insert(merged.end(), att.begin(), att.end());
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  std::vector<double> thresholds = {-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (i > 0) thresholds.push_back(0.5 * (merged[i - 1] + merged[i]));
    thresholds.push_back(merged[i]);
  }
  std::sort(thresholds.begin(), thresholds.end());

  const double na = static_cast<double>(att.size());
  const double nb = static_cast<double>(bona.size());
  MadRates out;
  out.apcer_at_bpcer.fill(1.0);
  out.bpcer_at_apcer.fill(1.0);
  double best_gap = std::numeric_limits<double>::infinity();
  for (double t : thresholds) {
    const double apcer =
        static_cast<double>(std::upper_bound(att.begin(), att.end(), t) - att.begin()) / na;
    const double bpcer =
        static_cast<double>(bona.end() - std::upper_bound(bona.begin(), bona.end(), t)) / nb;
    const double gap = std::abs(apcer - bpcer);
    const double mid = 0.5 * (apcer + bpcer);
    // Equal gaps resolve to the smaller rate, which keeps the EER invariant
    // under swapping the roles of the two lists.
    if (gap < best_gap || (gap == best_gap && mid < out.eer)) {
      best_gap = gap;
      out.eer = mid;
      out.eer_threshold = t;
    }
    for (std::size_t k = 0; k < kOperatingPoints.size(); ++k) {
      if (bpcer <= kOperatingPoints[k]) {
        out.apcer_at_bpcer[k] = std::min(out.apcer_at_bpcer[k], apcer);
      }
      if (apcer <= kOperatingPoints[k]) {
        out.bpcer_at_apcer[k] = std::min(out.bpcer_at_apcer[k], bpcer);
      }
    }
  }
  if (bona == att) {
    out.degenerate = true;
    out.eer = 0.5;
  }
  return out;
}

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, const char* what) {
  if (rows.size() < 2) {
    throw DataError(std::string("fid needs at least two feature vectors in ") + what);
  }
  const std::size_t d = rows[0].size();
  Eigen::MatrixXd m(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw StructuralError("fid: ragged feature set");
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& mu) {
  const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
  return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const std::vector<std::vector<double>>& a,
           const std::vector<std::vector<double>>& b) {
  const Eigen::MatrixXd xa = to_matrix(a, "the first set");
  const Eigen::MatrixXd xb = to_matrix(b, "the second set");
  if (xa.cols() != xb.cols()) {
    throw StructuralError("fid: feature dimensions differ (" + std::to_string(xa.cols()) +
                          " vs " + std::to_string(xb.cols()) + ")");
  }
  const Eigen::VectorXd ma = xa.colwise().mean();
  const Eigen::VectorXd mb = xb.colwise().mean();
  const Eigen::MatrixXd sa = covariance(xa, ma);
  const Eigen::MatrixXd sb = covariance(xb, mb);
  // tr((Sa Sb)^(1/2)) = tr((Sa^(1/2) Sb Sa^(1/2))^(1/2)), a symmetric PSD form.
  const Eigen::MatrixXd ra = psd_sqrt(sa);
  const Eigen::MatrixXd inner = ra * sb * ra;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (ma - mb).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, value);
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  double s = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - (size - 1) / 2.0;
    w[i] = std::exp(-d * d / (2 * sigma * sigma));
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

// Separable valid-mode filtering of one channel.
std::vector<double> filter(const std::vector<double>& img, int h, int w,
                           const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * img[y * w + x + i];
      tmp[y * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require_same(a, b, "ssim");
  const int h = a.height(), w = a.width();
  int size = std::min({11, h, w});
  if (size % 2 == 0) --size;
  if (size < 1) throw StructuralError("ssim: empty image");
  const auto k = gaussian_window(size, 1.5);
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const int plane = a.plane();
  double total = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> x(a.data() + c * plane, a.data() + (c + 1) * plane);
    std::vector<double> y(b.data() + c * plane, b.data() + (c + 1) * plane);
    std::vector<double> xx(plane), yy(plane), xy(plane);
    for (int i = 0; i < plane; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter(x, h, w, k), my = filter(y, h, w, k);
    const auto sxx = filter(xx, h, w, k), syy = filter(yy, h, w, k),
               sxy = filter(xy, h, w, k);
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

double psnr(const Image& a, const Image& b) {
  require_same(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    mse += d * d;
  }
  mse /= a.size();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace morphforge::eval
