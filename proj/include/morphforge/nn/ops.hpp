#pragma once

#include <utility>
#include <vector>

#include "morphforge/nn/var.hpp"

namespace morphforge::nn {

// Elementwise arithmetic; operands must share a shape.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var add_n(const std::vector<Var>& terms);

/// x * m where m is 1 x H x W, broadcast over the channels of x.
Var mul_mask(const Var& x, const Var& mask);
/// x + v where v is C x 1 x 1, broadcast over pixels.
Var add_pixel(const Var& x, const Var& v);
/// Per-channel mean of x weighted by a fixed 1 x H x W weight map -> C x 1 x 1.
Var weighted_channel_mean(const Var& x, const Tensor& weights);
/// Sum over channels -> 1 x H x W.
Var channel_sum(const Var& x);
/// sum_c w_c x_c -> 1 x H x W.
Var channel_weighted_sum(const Var& x, const std::vector<double>& weights);

Var leaky_relu(const Var& x, double slope);
Var relu(const Var& x);
/// (tanh(x) + 1) / 2, the bounded output activation.
Var tanh01(const Var& x);
Var sigmoid(const Var& x);
/// log(1 + exp(x)), stable for large |x|.
Var softplus(const Var& x);
/// Gradient is passed where lo < x < hi and zeroed elsewhere.
Var clamp(const Var& x, double lo, double hi);
Var abs(const Var& x);
Var square(const Var& x);
Var sqrt_eps(const Var& x, double eps);

Var sum(const Var& x);
Var mean(const Var& x);

Var concat_channels(const std::vector<Var>& parts);
/// Window [top, top+h) x [left, left+w); must lie inside x.
Var crop(const Var& x, int top, int left, int h, int w);
Var avg_pool2(const Var& x);
/// PyTorch-style adaptive average pooling to out_h x out_w bins.
Var adaptive_avg_pool(const Var& x, int out_h, int out_w);

/// weight: out x in x 1, bias: out x 1 x 1; x is flattened.
Var linear(const Var& x, const Var& weight, const Var& bias);
Var l2_normalize(const Var& x, double eps = 1e-12);
Var dot(const Var& a, const Var& b);

/// weight: out_ch x (in_ch * k * k) x 1, bias: out_ch x 1 x 1.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int kernel,
           int stride, int pad);
/// weight: in_ch x (out_ch * k * k) x 1, bias: out_ch x 1 x 1.
/// Output size (in - 1) * stride - 2 * pad + kernel.
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias,
                     int kernel, int stride, int pad);

struct Placement {
  int top = 0;
  int left = 0;
};

/// Pastes each patch onto `base` at its placement. Pixels covered by one patch
/// take that patch's value; pixels covered by two or more take the
/// elementwise minimum over the covering patches; uncovered pixels keep
/// `base`. Ties go to the earliest patch. Placements must lie inside base.
Var assemble_min(const Var& base, const std::vector<Var>& patches,
                 const std::vector<Placement>& placements);

int conv_out_size(int in, int kernel, int stride, int pad);

}  // namespace morphforge::nn
