#include "morphforge/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>

#include "morphforge/core/error.hpp"

namespace morphforge::nn {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<RowMat>;
using CMapR = Eigen::Map<const RowMat>;

Tensor zeros_like(const Tensor& t) {
  return Tensor(t.channels(), t.height(), t.width());
}

Tensor scalar_tensor(double v) { return Tensor(1, 1, 1, v); }

template <class Fwd, class Bwd>
Var unary(const Var& x, Fwd fwd, Bwd dydx) {
  const Tensor& xv = x.value();
  Tensor y = zeros_like(xv);
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = fwd(xv[i]);
  Node* xn = x.node();
  auto yv = std::make_shared<Tensor>(y);
  return make_op(std::move(y), {x}, [xn, yv, dydx](const Tensor& g) {
    Tensor dx = zeros_like(g);
    const Tensor& xval = xn->value;
    for (std::size_t i = 0; i < g.size(); ++i) {
      dx[i] = g[i] * dydx(xval[i], (*yv)[i]);
    }
    xn->accumulate(dx);
  });
}

void im2col(const double* img, int channels, int height, int width, int k,
            int stride, int pad, int out_h, int out_w, double* cols) {
  const int npos = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) *
                                 npos;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          double* dst = row + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, 0.0);
            continue;
          }
          const double* src =
              img + (static_cast<std::size_t>(c) * height + iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, int channels, int height, int width, int k,
            int stride, int pad, int out_h, int out_w, double* img) {
  const int npos = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row =
            cols + static_cast<std::size_t>((c * k + ky) * k + kx) * npos;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= height) continue;
          double* dst = img + (static_cast<std::size_t>(c) * height + iy) * width;
          const double* src = row + oy * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void require_same(const Var& a, const Var& b, const char* op) {
  require_same_shape(a.value(), b.value(), op);
}

}  // namespace

int conv_out_size(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(std::move(y), {a, b}, [an, bn](const Tensor& g) {
    if (an->requires_grad) an->accumulate(g);
    if (bn->requires_grad) bn->accumulate(g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(std::move(y), {a, b}, [an, bn](const Tensor& g) {
    if (an->requires_grad) an->accumulate(g);
    if (bn->requires_grad) {
      Tensor neg = g;
      for (double& v : neg.values()) v = -v;
      bn->accumulate(neg);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(std::move(y), {a, b}, [an, bn](const Tensor& g) {
    if (an->requires_grad) {
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= bn->value[i];
      an->accumulate(d);
    }
    if (bn->requires_grad) {
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= an->value[i];
      bn->accumulate(d);
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor y = a.value();
  for (double& v : y.values()) v *= s;
  Node* an = a.node();
  return make_op(std::move(y), {a}, [an, s](const Tensor& g) {
    Tensor d = g;
    for (double& v : d.values()) v *= s;
    an->accumulate(d);
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor y = a.value();
  for (double& v : y.values()) v += s;
  Node* an = a.node();
  return make_op(std::move(y), {a},
                 [an](const Tensor& g) { an->accumulate(g); });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw StructuralError("add_n of no terms");
  Tensor y = terms.front().value();
  for (std::size_t t = 1; t < terms.size(); ++t) {
    require_same(terms.front(), terms[t], "add_n");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += terms[t].value()[i];
  }
  std::vector<Node*> nodes;
  for (const Var& t : terms) nodes.push_back(t.node());
  return make_op(std::move(y), terms, [nodes](const Tensor& g) {
    for (Node* n : nodes) {
      if (n->requires_grad) n->accumulate(g);
    }
  });
}

Var mul_mask(const Var& x, const Var& mask) {
  const Tensor& xv = x.value();
  const Tensor& mv = mask.value();
  if (mv.channels() != 1 || mv.height() != xv.height() ||
      mv.width() != xv.width()) {
    throw StructuralError("mul_mask: mask " + mv.shape_string() +
                          " vs input " + xv.shape_string());
  }
  Tensor y = xv;
  const int plane = xv.plane();
  for (int c = 0; c < xv.channels(); ++c) {
    for (int p = 0; p < plane; ++p) y[c * plane + p] *= mv[p];
  }
  Node* xn = x.node();
  Node* mn = mask.node();
  return make_op(std::move(y), {x, mask}, [xn, mn, plane](const Tensor& g) {
    const int ch = g.channels();
    if (xn->requires_grad) {
      Tensor d = g;
      for (int c = 0; c < ch; ++c) {
        for (int p = 0; p < plane; ++p) d[c * plane + p] *= mn->value[p];
      }
      xn->accumulate(d);
    }
    if (mn->requires_grad) {
      Tensor d = zeros_like(mn->value);
      for (int c = 0; c < ch; ++c) {
        for (int p = 0; p < plane; ++p) {
          d[p] += g[c * plane + p] * xn->value[c * plane + p];
        }
      }
      mn->accumulate(d);
    }
  });
}

Var add_pixel(const Var& x, const Var& v) {
  const Tensor& xv = x.value();
  if (v.value().channels() != xv.channels() || v.value().plane() != 1) {
    throw StructuralError("add_pixel: vector " + v.value().shape_string() +
                          " vs input " + xv.shape_string());
  }
  Tensor y = xv;
  const int plane = xv.plane();
  for (int c = 0; c < xv.channels(); ++c) {
    for (int p = 0; p < plane; ++p) y[c * plane + p] += v.value()[c];
  }
  Node* xn = x.node();
  Node* vn = v.node();
  return make_op(std::move(y), {x, v}, [xn, vn, plane](const Tensor& g) {
    if (xn->requires_grad) xn->accumulate(g);
    if (vn->requires_grad) {
      Tensor d = zeros_like(vn->value);
      for (int c = 0; c < g.channels(); ++c) {
        for (int p = 0; p < plane; ++p) d[c] += g[c * plane + p];
      }
      vn->accumulate(d);
    }
  });
}

Var weighted_channel_mean(const Var& x, const Tensor& weights) {
  const Tensor& xv = x.value();
  if (weights.channels() != 1 || weights.plane() != xv.plane()) {
    throw StructuralError("weighted_channel_mean: weight shape");
  }
  double total = 0.0;
  for (double w : weights.values()) total += w;
  if (total <= 0.0) throw NumericError("weighted_channel_mean: zero weight");
  const int plane = xv.plane();
  Tensor y(xv.channels(), 1, 1);
  for (int c = 0; c < xv.channels(); ++c) {
    double s = 0.0;
    for (int p = 0; p < plane; ++p) s += xv[c * plane + p] * weights[p];
    y[c] = s / total;
  }
  Node* xn = x.node();
  auto w = std::make_shared<Tensor>(weights);
  return make_op(std::move(y), {x}, [xn, w, total, plane](const Tensor& g) {
    Tensor d = zeros_like(xn->value);
    for (int c = 0; c < d.channels(); ++c) {
      for (int p = 0; p < plane; ++p) {
        d[c * plane + p] = g[c] * (*w)[p] / total;
      }
    }
    xn->accumulate(d);
  });
}

Var channel_sum(const Var& x) {
  return channel_weighted_sum(x, std::vector<double>(x.channels(), 1.0));
}

Var channel_weighted_sum(const Var& x, const std::vector<double>& weights) {
  const Tensor& xv = x.value();
  if (static_cast<int>(weights.size()) != xv.channels()) {
    throw StructuralError("channel_weighted_sum: weight count mismatch");
  }
  const int plane = xv.plane();
  Tensor y(1, xv.height(), xv.width());
  for (int c = 0; c < xv.channels(); ++c) {
    if (weights[c] == 0.0) continue;
    for (int p = 0; p < plane; ++p) y[p] += weights[c] * xv[c * plane + p];
  }
  Node* xn = x.node();
  return make_op(std::move(y), {x}, [xn, plane, weights](const Tensor& g) {
    Tensor d = zeros_like(xn->value);
    for (int c = 0; c < d.channels(); ++c) {
      for (int p = 0; p < plane; ++p) d[c * plane + p] = weights[c] * g[p];
    }
    xn->accumulate(d);
  });
}

Var leaky_relu(const Var& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var tanh01(const Var& x) {
  return unary(
      x, [](double v) { return 0.5 * (std::tanh(v) + 1.0); },
      [](double, double y) {
        const double t = 2.0 * y - 1.0;
        return 0.5 * (1.0 - t * t);
      });
}

Var sigmoid(const Var& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& x) {
  return unary(
      x,
      [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
}

Var clamp(const Var& x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Var abs(const Var& x) {
  return unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var square(const Var& x) {
  return unary(
      x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Var sqrt_eps(const Var& x, double eps) {
  return unary(
      x, [eps](double v) { return std::sqrt(v + eps); },
      [](double, double y) { return 0.5 / y; });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  Node* xn = x.node();
  return make_op(scalar_tensor(s), {x}, [xn](const Tensor& g) {
    Tensor d = zeros_like(xn->value);
    d.fill(g[0]);
    xn->accumulate(d);
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0) throw StructuralError("mean of empty tensor");
  return scale(sum(x), 1.0 / n);
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw StructuralError("concat of no parts");
  const int h = parts.front().height();
  const int w = parts.front().width();
  int total = 0;
  for (const Var& p : parts) {
    if (p.height() != h || p.width() != w) {
      throw StructuralError("concat_channels: spatial mismatch " +
                            p.value().shape_string());
    }
    total += p.channels();
  }
  Tensor y(total, h, w);
  std::size_t offset = 0;
  std::vector<Node*> nodes;
  for (const Var& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.value().size(),
              y.data() + offset);
    offset += p.value().size();
    nodes.push_back(p.node());
  }
  return make_op(std::move(y), parts, [nodes](const Tensor& g) {
    std::size_t off = 0;
    for (Node* n : nodes) {
      const Tensor& v = n->value;
      if (n->requires_grad) {
        Tensor d = zeros_like(v);
        std::copy(g.data() + off, g.data() + off + v.size(), d.data());
        n->accumulate(d);
      }
      off += v.size();
    }
  });
}

Var crop(const Var& x, int top, int left, int h, int w) {
  const Tensor& xv = x.value();
  if (top < 0 || left < 0 || h <= 0 || w <= 0 || top + h > xv.height() ||
      left + w > xv.width()) {
    throw StructuralError("crop window outside " + xv.shape_string());
  }
  Tensor y(xv.channels(), h, w);
  for (int c = 0; c < xv.channels(); ++c) {
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        y.at(c, r, col) = xv.at(c, top + r, left + col);
      }
    }
  }
  Node* xn = x.node();
  return make_op(std::move(y), {x}, [xn, top, left, h, w](const Tensor& g) {
    Tensor d = zeros_like(xn->value);
    for (int c = 0; c < g.channels(); ++c) {
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
          d.at(c, top + r, left + col) = g.at(c, r, col);
        }
      }
    }
    xn->accumulate(d);
  });
}

Var avg_pool2(const Var& x) {
  const Tensor& xv = x.value();
  const int oh = xv.height() / 2;
  const int ow = xv.width() / 2;
  if (oh == 0 || ow == 0) throw StructuralError("avg_pool2 on tiny input");
  Tensor y(xv.channels(), oh, ow);
  for (int c = 0; c < xv.channels(); ++c) {
    for (int r = 0; r < oh; ++r) {
      for (int col = 0; col < ow; ++col) {
        y.at(c, r, col) =
            0.25 * (xv.at(c, 2 * r, 2 * col) + xv.at(c, 2 * r, 2 * col + 1) +
                    xv.at(c, 2 * r + 1, 2 * col) +
                    xv.at(c, 2 * r + 1, 2 * col + 1));
      }
    }
  }
  Node* xn = x.node();
  return make_op(std::move(y), {x}, [xn](const Tensor& g) {
    Tensor d = zeros_like(xn->value);
    for (int c = 0; c < g.channels(); ++c) {
      for (int r = 0; r < g.height(); ++r) {
        for (int col = 0; col < g.width(); ++col) {
          const double q = 0.25 * g.at(c, r, col);
          d.at(c, 2 * r, 2 * col) += q;
          d.at(c, 2 * r, 2 * col + 1) += q;
          d.at(c, 2 * r + 1, 2 * col) += q;
          d.at(c, 2 * r + 1, 2 * col + 1) += q;
        }
      }
    }
    xn->accumulate(d);
  });
}

Var adaptive_avg_pool(const Var& x, int out_h, int out_w) {
  const Tensor& xv = x.value();
  const int H = xv.height();
  const int W = xv.width();
  if (out_h <= 0 || out_w <= 0 || H <= 0 || W <= 0) {
    throw StructuralError("adaptive_avg_pool: bad output size");
  }
  auto bin = [](int i, int in, int out) {
    const int start = (i * in) / out;
    const int end = ((i + 1) * in + out - 1) / out;
    return std::pair{start, end};
  };
  Tensor y(xv.channels(), out_h, out_w);
  for (int c = 0; c < xv.channels(); ++c) {
    for (int i = 0; i < out_h; ++i) {
      const auto [y0, y1] = bin(i, H, out_h);
      for (int j = 0; j < out_w; ++j) {
        const auto [x0, x1] = bin(j, W, out_w);
        double s = 0.0;
        for (int r = y0; r < y1; ++r) {
          for (int col = x0; col < x1; ++col) s += xv.at(c, r, col);
        }
        y.at(c, i, j) = s / ((y1 - y0) * (x1 - x0));
      }
    }
  }
  Node* xn = x.node();
  return make_op(std::move(y), {x}, [xn, bin, H, W](const Tensor& g) {
    Tensor d = zeros_like(xn->value);
    for (int c = 0; c < g.channels(); ++c) {
      for (int i = 0; i < g.height(); ++i) {
        const auto [y0, y1] = bin(i, H, g.height());
        for (int j = 0; j < g.width(); ++j) {
          const auto [x0, x1] = bin(j, W, g.width());
          const double q = g.at(c, i, j) / ((y1 - y0) * (x1 - x0));
          for (int r = y0; r < y1; ++r) {
            for (int col = x0; col < x1; ++col) d.at(c, r, col) += q;
          }
        }
      }
    }
    xn->accumulate(d);
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const int in = static_cast<int>(x.value().size());
  const int out = weight.channels();
  if (weight.height() != in || bias.value().size() != static_cast<std::size_t>(out)) {
    throw StructuralError("linear: weight " + weight.value().shape_string() +
                          " does not accept input of size " +
                          std::to_string(in));
  }
  Tensor y(out, 1, 1);
  CMapR wm(weight.value().data(), out, in);
  Eigen::Map<const Eigen::VectorXd> xm(x.value().data(), in);
  Eigen::Map<Eigen::VectorXd> ym(y.data(), out);
  Eigen::Map<const Eigen::VectorXd> bm(bias.value().data(), out);
  ym = wm * xm + bm;
  Node* xn = x.node();
  Node* wn = weight.node();
  Node* bn = bias.node();
  return make_op(std::move(y), {x, weight, bias},
                 [xn, wn, bn, in, out](const Tensor& g) {
                   Eigen::Map<const Eigen::VectorXd> gm(g.data(), out);
                   if (xn->requires_grad) {
                     Tensor d = zeros_like(xn->value);
                     CMapR w(wn->value.data(), out, in);
                     Eigen::Map<Eigen::VectorXd>(d.data(), in) =
                         w.transpose() * gm;
                     xn->accumulate(d);
                   }
                   if (wn->requires_grad) {
                     Tensor d = zeros_like(wn->value);
                     Eigen::Map<const Eigen::VectorXd> xv(xn->value.data(), in);
                     MapR(d.data(), out, in) = gm * xv.transpose();
                     wn->accumulate(d);
                   }
                   if (bn->requires_grad) bn->accumulate(g);
                 });
}

Var l2_normalize(const Var& x, double eps) {
  const Tensor& xv = x.value();
  double ss = 0.0;
  for (double v : xv.values()) ss += v * v;
  const double norm = std::sqrt(ss + eps);
  Tensor y = xv;
  for (double& v : y.values()) v /= norm;
  Node* xn = x.node();
  auto yv = std::make_shared<Tensor>(y);
  return make_op(std::move(y), {x}, [xn, yv, norm](const Tensor& g) {
    double yg = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) yg += (*yv)[i] * g[i];
    Tensor d = zeros_like(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      d[i] = (g[i] - (*yv)[i] * yg) / norm;
    }
    xn->accumulate(d);
  });
}

Var dot(const Var& a, const Var& b) {
  if (a.value().size() != b.value().size()) {
    throw StructuralError("dot: size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    s += a.value()[i] * b.value()[i];
  }
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(scalar_tensor(s), {a, b}, [an, bn](const Tensor& g) {
    if (an->requires_grad) {
      Tensor d = bn->value;
      for (double& v : d.values()) v *= g[0];
      an->accumulate(d);
    }
    if (bn->requires_grad) {
      Tensor d = an->value;
      for (double& v : d.values()) v *= g[0];
      bn->accumulate(d);
    }
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int kernel,
           int stride, int pad) {
  const Tensor& xv = x.value();
  const int cin = xv.channels();
  const int cout = weight.channels();
  const int kk = cin * kernel * kernel;
  if (weight.height() != kk) {
    throw StructuralError("conv2d: weight " + weight.value().shape_string() +
                          " does not match input " + xv.shape_string());
  }
  const int oh = conv_out_size(xv.height(), kernel, stride, pad);
  const int ow = conv_out_size(xv.width(), kernel, stride, pad);
  if (oh <= 0 || ow <= 0) {
    throw StructuralError("conv2d: empty output for input " +
                          xv.shape_string());
  }
  const int npos = oh * ow;
  auto cols = std::make_shared<RowMat>(kk, npos);
  im2col(xv.data(), cin, xv.height(), xv.width(), kernel, stride, pad, oh, ow,
         cols->data());
  Tensor y(cout, oh, ow);
  MapR ym(y.data(), cout, npos);
  ym.noalias() = CMapR(weight.value().data(), cout, kk) * (*cols);
  for (int c = 0; c < cout; ++c) ym.row(c).array() += bias.value()[c];

  Node* xn = x.node();
  Node* wn = weight.node();
  Node* bn = bias.node();
  const int ih = xv.height();
  const int iw = xv.width();
  return make_op(
      std::move(y), {x, weight, bias},
      [=](const Tensor& g) {
        CMapR gm(g.data(), cout, npos);
        if (wn->requires_grad) {
          Tensor d = zeros_like(wn->value);
          MapR(d.data(), cout, kk).noalias() = gm * cols->transpose();
          wn->accumulate(d);
        }
        if (bn->requires_grad) {
          Tensor d = zeros_like(bn->value);
          for (int c = 0; c < cout; ++c) d[c] = gm.row(c).sum();
          bn->accumulate(d);
        }
        if (xn->requires_grad) {
          RowMat dcols = CMapR(wn->value.data(), cout, kk).transpose() * gm;
          Tensor d = zeros_like(xn->value);
          col2im(dcols.data(), cin, ih, iw, kernel, stride, pad, oh, ow,
                 d.data());
          xn->accumulate(d);
        }
      });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias,
                     int kernel, int stride, int pad) {
  const Tensor& xv = x.value();
  const int cin = xv.channels();
  const int cout = static_cast<int>(bias.value().size());
  const int kk = cout * kernel * kernel;
  if (weight.channels() != cin || weight.height() != kk) {
    throw StructuralError("conv_transpose2d: weight " +
                          weight.value().shape_string() +
                          " does not match input " + xv.shape_string());
  }
  const int ih = xv.height();
  const int iw = xv.width();
  const int oh = (ih - 1) * stride - 2 * pad + kernel;
  const int ow = (iw - 1) * stride - 2 * pad + kernel;
  if (oh <= 0 || ow <= 0) {
    throw StructuralError("conv_transpose2d: empty output");
  }
  const int npos = ih * iw;
  RowMat cols =
      CMapR(weight.value().data(), cin, kk).transpose() *
      CMapR(xv.data(), cin, npos);
  Tensor y(cout, oh, ow);
  col2im(cols.data(), cout, oh, ow, kernel, stride, pad, ih, iw, y.data());
  const int oplane = oh * ow;
  for (int c = 0; c < cout; ++c) {
    for (int p = 0; p < oplane; ++p) y[c * oplane + p] += bias.value()[c];
  }
  Node* xn = x.node();
  Node* wn = weight.node();
  Node* bn = bias.node();
  return make_op(
      std::move(y), {x, weight, bias},
      [=](const Tensor& g) {
        RowMat gcols(kk, npos);
        im2col(g.data(), cout, oh, ow, kernel, stride, pad, ih, iw,
               gcols.data());
        if (xn->requires_grad) {
          Tensor d = zeros_like(xn->value);
          MapR(d.data(), cin, npos).noalias() =
              CMapR(wn->value.data(), cin, kk) * gcols;
          xn->accumulate(d);
        }
        if (wn->requires_grad) {
          Tensor d = zeros_like(wn->value);
          MapR(d.data(), cin, kk).noalias() =
              CMapR(xn->value.data(), cin, npos) * gcols.transpose();
          wn->accumulate(d);
        }
        if (bn->requires_grad) {
          Tensor d = zeros_like(bn->value);
          for (int c = 0; c < cout; ++c) {
            double s = 0.0;
            for (int p = 0; p < oplane; ++p) s += g[c * oplane + p];
            d[c] = s;
          }
          bn->accumulate(d);
        }
      });
}

Var assemble_min(const Var& base, const std::vector<Var>& patches,
                 const std::vector<Placement>& placements) {
  if (patches.size() != placements.size()) {
    throw StructuralError("assemble_min: patch/placement count mismatch");
  }
  const Tensor& bv = base.value();
  Tensor y = bv;
  // Owner of each element: -1 for base, otherwise the patch index.
  auto owner = std::make_shared<std::vector<int>>(bv.size(), -1);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const Tensor& pv = patches[i].value();
    const Placement& at = placements[i];
    if (pv.channels() != bv.channels() || at.top < 0 || at.left < 0 ||
        at.top + pv.height() > bv.height() ||
        at.left + pv.width() > bv.width()) {
      throw StructuralError("assemble_min: patch " + std::to_string(i) +
                            " does not fit the canvas");
    }
    for (int c = 0; c < pv.channels(); ++c) {
      for (int r = 0; r < pv.height(); ++r) {
        for (int col = 0; col < pv.width(); ++col) {
          const std::size_t idx =
              (static_cast<std::size_t>(c) * bv.height() + at.top + r) *
                  bv.width() +
              at.left + col;
          const double v = pv.at(c, r, col);
          if ((*owner)[idx] < 0 || v < y[idx]) {
            y[idx] = v;
            (*owner)[idx] = static_cast<int>(i);
          }
        }
      }
    }
  }
  std::vector<Var> inputs{base};
  inputs.insert(inputs.end(), patches.begin(), patches.end());
  std::vector<Node*> nodes;
  for (const Var& p : patches) nodes.push_back(p.node());
  Node* bn = base.node();
  return make_op(
      std::move(y), inputs, [bn, nodes, placements, owner](const Tensor& g) {
        const int H = g.height();
        const int W = g.width();
        if (bn->requires_grad) {
          Tensor d = zeros_like(g);
          for (std::size_t i = 0; i < g.size(); ++i) {
            if ((*owner)[i] < 0) d[i] = g[i];
          }
          bn->accumulate(d);
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          Node* pn = nodes[i];
          if (!pn->requires_grad) continue;
          Tensor d = zeros_like(pn->value);
          const Placement& at = placements[i];
          for (int c = 0; c < d.channels(); ++c) {
            for (int r = 0; r < d.height(); ++r) {
              for (int col = 0; col < d.width(); ++col) {
                const std::size_t idx =
                    (static_cast<std::size_t>(c) * H + at.top + r) * W +
                    at.left + col;
                if ((*owner)[idx] == static_cast<int>(i)) {
                  d.at(c, r, col) = g[idx];
                }
              }
            }
          }
          pn->accumulate(d);
        }
      });
}

}  // namespace morphforge::nn
