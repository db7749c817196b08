#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "morphforge/nn/ops.hpp"
#include "morphforge/nn/var.hpp"

namespace morphforge::nn {

using Rng = std::mt19937_64;

/// Normal(0, stddev) tensor; biases are created as zeros by the layers.
Tensor normal_tensor(int c, int h, int w, double stddev, Rng& rng);

inline constexpr double kInitStddev = 0.02;

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad,
         Rng& rng, double stddev = kInitStddev, bool trainable = true);

  Var operator()(const Var& x) const {
    return conv2d(x, weight_, bias_, kernel_, stride_, pad_);
  }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  int pad() const { return pad_; }

 private:
  int in_ = 0, out_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
  Var weight_, bias_;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride,
                  int pad, Rng& rng, double stddev = kInitStddev);

  Var operator()(const Var& x) const {
    return conv_transpose2d(x, weight_, bias_, kernel_, stride_, pad_);
  }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;

 private:
  int kernel_ = 0, stride_ = 1, pad_ = 0;
  Var weight_, bias_;
};

class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features, Rng& rng,
         double stddev = kInitStddev, bool trainable = true);

  Var operator()(const Var& x) const { return linear(x, weight_, bias_); }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;

 private:
  Var weight_, bias_;
};

std::vector<Var> vars_of(const std::vector<NamedParam>& params);
std::size_t parameter_count(const std::vector<NamedParam>& params);

}  // namespace morphforge::nn
