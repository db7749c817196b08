#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morphforge/nn/layers.hpp"

namespace morphforge::nn {

struct EncoderConfig {
  std::uint64_t seed = 0;
  int out_dim = 128;
  std::vector<int> widths = {16, 32, 32};
  int pooled = 4;        // adaptive pool to pooled x pooled before the head
  bool normalize = true;  // unit L2 norm output
};

/// Fixed random convolutional encoder: stride-2 4x4 convs with LeakyReLU,
/// adaptive average pooling and a linear head. He-initialised with random
/// biases; parameters never train. Input pixels are centred (x - 0.5).
class RandomConvEncoder {
 public:
  explicit RandomConvEncoder(const EncoderConfig& cfg);

  /// out_dim x 1 x 1.
  Var operator()(const Var& img) const;
  /// Feature map after every conv block.
  std::vector<Var> feature_maps(const Var& img) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  std::vector<Conv2d> convs_;
  Linear head_;
};

}  // namespace morphforge::nn
