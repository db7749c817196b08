#pragma once

#include "morphforge/core/image.hpp"

namespace morphforge::blend {

/// m * i_m + (1 - m) * i_aux with the mask broadcast over channels.
Image mask_guided_blend(const Image& i_m, const Image& i_aux, const FaceMask& m_aux);

/// Same contract with the contributor's image as background.
Image blend_with_contributor(const Image& i_m, const Image& contributor,
                             const FaceMask& mask);

struct PoissonReport {
  int unknowns = 0;
  int iterations = 0;        // summed over channels
  double max_residual = 0.0;  // max |A f - b| over channels
};

inline constexpr double kPoissonTolerance = 1e-8;
inline constexpr int kPoissonMaxIterations = 10000;

/// Seamless cloning of fg into bg over {mask > 0.5} minus the frame border:
/// for every unknown p, 4 f_p - sum_{q in N(p), q unknown} f_q =
/// sum_{q in N(p), q known} bg_q + sum_{q in N(p)} (fg_p - fg_q). Solved per
/// channel by conjugate gradients on the 5-point Laplacian until the max
/// residual is below kPoissonTolerance. Empty region
/// returns bg. NumericError if CG does not converge.
Image poisson_blend(const Image& fg, const Image& bg, const FaceMask& mask,
                    PoissonReport* report = nullptr);

}  // namespace morphforge::blend
