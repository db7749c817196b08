#include "morphforge/nn/encoder.hpp"

#include <cmath>

#include "morphforge/core/error.hpp"

namespace morphforge::nn {

namespace {

// Replaces the zero biases of a fresh layer with N(0, stddev) draws.
void randomise_bias(Conv2d& conv, Rng& rng, double stddev) {
  std::vector<NamedParam> p;
  conv.collect("", p);
  p[1].var.mutable_value() = normal_tensor(p[1].var.channels(), 1, 1, stddev, rng);
}

}  // namespace

RandomConvEncoder::RandomConvEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
  if (cfg.widths.empty() || cfg.out_dim < 1 || cfg.pooled < 1) {
    throw ConfigError("encoder configuration is empty");
  }
  Rng rng(cfg.seed);
  int in = 3;
  for (int w : cfg.widths) {
    const double he = std::sqrt(2.0 / (in * 16));
    convs_.emplace_back(in, w, 4, 2, 1, rng, he, false);
    randomise_bias(convs_.back(), rng, 0.1);
    in = w;
  }
  const int features = in * cfg.pooled * cfg.pooled;
  head_ = Linear(features, cfg.out_dim, rng, std::sqrt(1.0 / features), false);
}

std::vector<Var> RandomConvEncoder::feature_maps(const Var& img) const {
  std::vector<Var> maps;
  Var h = add_scalar(img, -0.5);
  for (const auto& c : convs_) {
    h = leaky_relu(c(h), 0.2);
    maps.push_back(h);
  }
  return maps;
}

Var RandomConvEncoder::operator()(const Var& img) const {
  const Var last = feature_maps(img).back();
  const Var z = head_(adaptive_avg_pool(last, cfg_.pooled, cfg_.pooled));
  return cfg_.normalize ? l2_normalize(z) : z;
}

}  // namespace morphforge::nn
