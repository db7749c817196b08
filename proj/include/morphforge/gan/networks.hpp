#pragma once

#include <string>
#include <vector>

#include "morphforge/nn/layers.hpp"

namespace morphforge::gan {

struct UNetConfig {
  int in_channels = 3;
  int out_channels = 3;
  int depth = 8;
  int base_channels = 64;
  int max_channels = 512;
};

/// Encoder of stride-2 4x4 convolutions (LeakyReLU 0.2 between them), decoder
/// of 4x4 transposed convolutions with ReLU and skip concatenation, output
/// mapped to [0,1] by a scaled tanh.
class UNet {
 public:
  UNet() = default;
  UNet(const UNetConfig& cfg, nn::Rng& rng);

  /// ConfigError if the input size is not divisible by 2^depth.
  nn::Var operator()(const nn::Var& x) const;
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& out) const;

  const UNetConfig& config() const { return cfg_; }
  int channels_at(int level) const;
  /// Spatial size of the innermost feature map for an input of (h, w).
  std::pair<int, int> bottleneck_size(int height, int width) const;

 private:
  UNetConfig cfg_;
  std::vector<nn::Conv2d> down_;
  std::vector<nn::ConvTranspose2d> up_;  // up_[j] produces decoder level j
};

/// Flat 3x3 conv + LeakyReLU, residual blocks, final 3x3 conv to RGB.
class FusionNet {
 public:
  FusionNet() = default;
  FusionNet(int in_channels, int width, int blocks, nn::Rng& rng);

  nn::Var operator()(const nn::Var& x) const;
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& out) const;

 private:
  nn::Conv2d head_;
  std::vector<std::pair<nn::Conv2d, nn::Conv2d>> blocks_;
  nn::Conv2d tail_;
};

struct DiscOutput {
  nn::Var logits;
  /// Activation after every LeakyReLU, in order.
  std::vector<nn::Var> features;
};

/// Patch discriminator: `layers` stride-2 4x4 convolutions, one stride-1
/// conv, and a stride-1 conv to a single logit channel. With 3 stride-2
/// layers each logit sees a 70x70 window.
class PatchDiscriminator {
 public:
  PatchDiscriminator() = default;
  PatchDiscriminator(std::string name, int in_channels, int base_channels,
                     int layers, nn::Rng& rng);

  /// NumericError naming the layer if an activation is non-finite.
  DiscOutput operator()(const nn::Var& x) const;
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& out) const;

  int layers() const { return layers_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int layers_ = 0;
  std::vector<nn::Conv2d> convs_;
};

/// Receptive field of one logit of a PatchDiscriminator.
int patch_receptive_field(int layers);
/// Largest layer count <= max_layers that still yields a non-empty logit
/// grid for an input of (h, w); 0 if none does.
int fitting_disc_layers(int height, int width, int max_layers);

}  // namespace morphforge::gan
