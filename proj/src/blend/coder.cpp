#include "morphforge/blend/coder.hpp"

#include <cmath>

#include "morphforge/core/error.hpp"
#include "morphforge/nn/adam.hpp"

namespace morphforge::blend {

using nn::Var;

LinearCoder::LinearCoder(Eigen::MatrixXd basis, Eigen::VectorXd mean, int height,
                         int width)
    : q_(std::move(basis)), mu_(std::move(mean)), height_(height), width_(width) {
  if (q_.rows() != 3L * height * width || mu_.size() != q_.rows()) {
    throw StructuralError("LinearCoder basis does not match the image size");
  }
}

LatentCode LinearCoder::encode(const Image& img) const {
  require_image(img, "LinearCoder::encode");
  if (static_cast<Eigen::Index>(img.size()) != q_.rows()) {
    throw StructuralError("LinearCoder::encode: image size mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> x(img.data(), img.size());
  const Eigen::VectorXd w = q_.transpose() * (x - mu_);
  return {std::vector<double>(w.data(), w.data() + w.size())};
}

Image LinearCoder::generate(const LatentCode& code) const {
  if (static_cast<Eigen::Index>(code.w.size()) != q_.cols()) {
    throw StructuralError("LinearCoder::generate: code size mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> w(code.w.data(), code.w.size());
  const Eigen::VectorXd x = q_ * w + mu_;
  Image img = make_image(height_, width_);
  std::copy(x.data(), x.data() + x.size(), img.data());
  clamp01(img);
  return img;
}

ConvAutoencoder::ConvAutoencoder(const AutoencoderConfig& cfg) : cfg_(cfg) {
  const int m = 1 << (cfg.widths.size() + 1);
  if (cfg.resolution % m != 0) {
    throw ConfigError("autoencoder resolution must be divisible by " +
                      std::to_string(m));
  }
  nn::Rng rng(cfg.seed);
  // Wider init than the GAN default so the untrained decoder is not flat.
  const double sd = 0.1;
  int in = 3;
  for (int w : cfg.widths) {
    enc_.emplace_back(in, w, 4, 2, 1, rng, sd);
    in = w;
  }
  enc_.emplace_back(in, cfg.latent_channels, 4, 2, 1, rng, sd);
  in = cfg.latent_channels;
  for (auto it = cfg.widths.rbegin(); it != cfg.widths.rend(); ++it) {
    dec_.emplace_back(in, *it, 4, 2, 1, rng, sd);
    in = *it;
  }
  dec_.emplace_back(in, 3, 4, 2, 1, rng, sd);
}

Var ConvAutoencoder::encode_var(const Var& img) const {
  Var h = nn::add_scalar(img, -0.5);
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    h = enc_[i](h);
    if (i + 1 < enc_.size()) h = nn::leaky_relu(h, 0.2);
  }
  return h;
}

Var ConvAutoencoder::decode_var(const Var& latent) const {
  Var h = latent;
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    h = dec_[i](h);
    if (i + 1 < dec_.size()) h = nn::relu(h);
  }
  return nn::tanh01(h);
}

LatentCode ConvAutoencoder::encode(const Image& img) const {
  require_image(img, "ConvAutoencoder::encode", cfg_.resolution);
  nn::NoGradGuard guard;
  const Tensor z = encode_var(nn::constant(img)).value();
  return {std::vector<double>(z.values().begin(), z.values().end())};
}

Image ConvAutoencoder::generate(const LatentCode& code) const {
  const int side = cfg_.resolution >> (cfg_.widths.size() + 1);
  Tensor z(cfg_.latent_channels, side, side);
  if (code.w.size() != z.size()) {
    throw StructuralError("ConvAutoencoder::generate: code size mismatch");
  }
  std::copy(code.w.begin(), code.w.end(), z.data());
  nn::NoGradGuard guard;
  return decode_var(nn::constant(z)).value();
}

std::vector<double> ConvAutoencoder::train(const std::vector<Image>& images,
                                           int steps, double learning_rate) {
  if (images.empty()) throw DataError("autoencoder training set is empty");
  nn::Adam opt(nn::vars_of(parameters()),
               {.learning_rate = learning_rate, .beta1 = 0.9, .beta2 = 0.999});
  std::vector<double> losses;
  losses.reserve(steps);
  for (int s = 0; s < steps; ++s) {
    const Image& img = images[s % images.size()];
    opt.zero_grad();
    const Var x = nn::constant(img);
    const Var loss = nn::mean(nn::square(nn::sub(decode_var(encode_var(x)), x)));
    if (!std::isfinite(loss.item())) {
      throw NumericError("autoencoder loss became non-finite at step " +
                         std::to_string(s));
    }
    nn::backward(loss);
    opt.step();
    losses.push_back(loss.item());
  }
  return losses;
}

std::vector<nn::NamedParam> ConvAutoencoder::parameters() const {
  std::vector<nn::NamedParam> p;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    enc_[i].collect("coder/enc" + std::to_string(i), p);
  }
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    dec_[i].collect("coder/dec" + std::to_string(i), p);
  }
  return p;
}

Image auxiliary_morph(const Image& i1, const Image& i2, const LatentCoder& coder,
                      double alpha) {
  require_same_shape(i1, i2, "auxiliary_morph");
  const LatentCode a = coder.encode(i1);
  const LatentCode b = coder.encode(i2);
  if (a.w.size() != b.w.size()) {
    throw StructuralError("auxiliary_morph: latent sizes differ");
  }
  LatentCode mix;
  mix.w.resize(a.w.size());
  for (std::size_t i = 0; i < a.w.size(); ++i) {
    mix.w[i] = (1.0 - alpha) * a.w[i] + alpha * b.w[i];
  }
  Image out = coder.generate(mix);
  if (!out.same_shape(i1)) {
    throw StructuralError("auxiliary generator returned " + out.shape_string() +
                          ", expected " + i1.shape_string());
  }
  for (double v : out.values()) {
    if (!std::isfinite(v)) throw NumericError("auxiliary generator output is non-finite");
  }
  clamp01(out);
  return out;
}

}  // namespace morphforge::blend
