#include "morphforge/blend/blend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "morphforge/core/error.hpp"

namespace morphforge::blend {

Image mask_guided_blend(const Image& i_m, const Image& i_aux, const FaceMask& m_aux) {
  require_image(i_m, "mask_guided_blend");
  require_same_shape(i_m, i_aux, "mask_guided_blend");
  require_mask_for(m_aux, i_m, "mask_guided_blend");
  Image out = i_m;
  const int plane = i_m.plane();
  for (int c = 0; c < 3; ++c) {
    for (int p = 0; p < plane; ++p) {
      const std::size_t i = c * plane + p;
      // lerp is exact at m = 0, m = 1 and for equal operands, and stays
      // between them.
      out[i] = std::lerp(i_aux[i], i_m[i], m_aux[p]);
    }
  }
  return out;
}

Image blend_with_contributor(const Image& i_m, const Image& contributor,
                             const FaceMask& mask) {
  return mask_guided_blend(i_m, contributor, mask);
}

namespace {

// y = A x restricted to the unknowns (4 on the diagonal, -1 per unknown
// neighbour).
void apply(const std::vector<std::array<int, 4>>& nbr, const std::vector<double>& x,
           std::vector<double>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 4.0 * x[i];
    for (int j : nbr[i]) {
      if (j >= 0) s -= x[j];
    }
    y[i] = s;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

Image poisson_blend(const Image& fg, const Image& bg, const FaceMask& mask,
                    PoissonReport* report) {
  require_image(fg, "poisson_blend");
  require_same_shape(fg, bg, "poisson_blend");
  require_mask_for(mask, fg, "poisson_blend");
  const int H = fg.height(), W = fg.width();
  std::vector<int> index(static_cast<std::size_t>(H) * W, -1);
  std::vector<std::pair<int, int>> cells;
  for (int y = 1; y + 1 < H; ++y) {
    for (int x = 1; x + 1 < W; ++x) {
      if (mask.at(0, y, x) > 0.5) {
        index[y * W + x] = static_cast<int>(cells.size());
        cells.emplace_back(y, x);
      }
    }
  }
  PoissonReport rep;
  rep.unknowns = static_cast<int>(cells.size());
  Image out = bg;
  if (cells.empty()) {
    if (report) *report = rep;
    return out;
  }
  const int dy[4] = {-1, 1, 0, 0};
  const int dx[4] = {0, 0, -1, 1};
  std::vector<std::array<int, 4>> nbr(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [y, x] = cells[i];
    for (int k = 0; k < 4; ++k) nbr[i][k] = index[(y + dy[k]) * W + (x + dx[k])];
  }
  const std::size_t n = cells.size();
  std::vector<double> b(n), f(n), r(n), p(n), ap(n);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto [y, x] = cells[i];
      double s = 0.0;
      for (int k = 0; k < 4; ++k) {
        const int ny = y + dy[k], nx = x + dx[k];
        s += fg.at(c, y, x) - fg.at(c, ny, nx);
        if (nbr[i][k] < 0) s += bg.at(c, ny, nx);
      }
      b[i] = s;
      f[i] = bg.at(c, y, x);
    }
    apply(nbr, f, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    p = r;
    double rr = dot(r, r);
    int it = 0;
    while (max_abs(r) > kPoissonTolerance) {
      if (++it > kPoissonMaxIterations) {
        throw NumericError("poisson_blend: conjugate gradients did not converge");
      }
      apply(nbr, p, ap);
      const double a = rr / dot(p, ap);
      for (std::size_t i = 0; i < n; ++i) {
        f[i] += a * p[i];
        r[i] -= a * ap[i];
      }
      const double rr_new = dot(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    rep.iterations += it;
    apply(nbr, f, ap);
    for (std::size_t i = 0; i < n; ++i) {
      rep.max_residual = std::max(rep.max_residual, std::abs(ap[i] - b[i]));
      const auto [y, x] = cells[i];
      out.at(c, y, x) = f[i];
    }
  }
  clamp01(out);
  if (report) *report = rep;
  return out;
}

}  // namespace morphforge::blend
