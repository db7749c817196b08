#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "morphforge/core/archive.hpp"
#include "morphforge/core/image.hpp"
#include "morphforge/nn/layers.hpp"

namespace morphforge::blend {

struct LatentCode {
  std::vector<double> w;
};

/// Encoder + generator pair of the auxiliary latent-interpolation morph.
class LatentCoder {
 public:
  virtual ~LatentCoder() = default;
  virtual LatentCode encode(const Image& img) const = 0;
  virtual Image generate(const LatentCode& code) const = 0;
};

/// encode(x) = Q^T (x - mu), generate(w) = clamp(Q w + mu). With a square
/// orthonormal Q, generate(encode(x)) == x up to rounding.
class LinearCoder : public LatentCoder {
 public:
  LinearCoder(Eigen::MatrixXd basis, Eigen::VectorXd mean, int height, int width);

  LatentCode encode(const Image& img) const override;
  Image generate(const LatentCode& code) const override;

 private:
  Eigen::MatrixXd q_;
  Eigen::VectorXd mu_;
  int height_, width_;
};

struct AutoencoderConfig {
  int resolution = 64;
  std::vector<int> widths = {16, 32};
  int latent_channels = 8;
  std::uint64_t seed = 0;
};

/// Small convolutional autoencoder; the latent code is the flattened
/// bottleneck (latent_channels x R/2^k x R/2^k).
class ConvAutoencoder : public LatentCoder {
 public:
  explicit ConvAutoencoder(const AutoencoderConfig& cfg);

  LatentCode encode(const Image& img) const override;
  Image generate(const LatentCode& code) const override;

  nn::Var encode_var(const nn::Var& img) const;
  nn::Var decode_var(const nn::Var& latent) const;

  /// Adam on mean squared reconstruction error, one image per step, drawn
  /// cyclically. Returns the per-step losses.
  std::vector<double> train(const std::vector<Image>& images, int steps,
                            double learning_rate);

  std::vector<nn::NamedParam> parameters() const;
  const AutoencoderConfig& config() const { return cfg_; }

 private:
  AutoencoderConfig cfg_;
  std::vector<nn::Conv2d> enc_;
  std::vector<nn::ConvTranspose2d> dec_;
};

/// generate((1 - alpha) encode(i1) + alpha encode(i2)).
Image auxiliary_morph(const Image& i1, const Image& i2, const LatentCoder& coder,
                      double alpha = 0.5);

}  // namespace morphforge::blend
