#include "morphforge/gan/networks.hpp"

#include <algorithm>

#include "morphforge/core/error.hpp"

namespace morphforge::gan {

using nn::Var;

UNet::UNet(const UNetConfig& cfg, nn::Rng& rng) : cfg_(cfg) {
  if (cfg.depth < 1) throw ConfigError("U-Net depth must be at least 1");
  if (cfg.base_channels < 1 || cfg.max_channels < cfg.base_channels) {
    throw ConfigError("U-Net channel widths are invalid");
  }
  for (int i = 0; i < cfg.depth; ++i) {
    const int in = i == 0 ? cfg.in_channels : channels_at(i - 1);
    down_.emplace_back(in, channels_at(i), 4, 2, 1, rng);
  }
  up_.resize(cfg.depth);
  for (int j = cfg.depth - 1; j >= 0; --j) {
    const int in = j == cfg.depth - 1 ? channels_at(j) : 2 * channels_at(j);
    const int out = j == 0 ? cfg.out_channels : channels_at(j - 1);
    up_[j] = nn::ConvTranspose2d(in, out, 4, 2, 1, rng);
  }
}

int UNet::channels_at(int level) const {
  long c = static_cast<long>(cfg_.base_channels) << std::min(level, 20);
  return static_cast<int>(std::min<long>(c, cfg_.max_channels));
}

std::pair<int, int> UNet::bottleneck_size(int height, int width) const {
  return {height >> cfg_.depth, width >> cfg_.depth};
}

Var UNet::operator()(const Var& x) const {
  const int m = 1 << cfg_.depth;
  if (x.channels() != cfg_.in_channels) {
    throw StructuralError("U-Net expects " + std::to_string(cfg_.in_channels) +
                          " input channels, got " +
                          std::to_string(x.channels()));
  }
  if (x.height() % m != 0 || x.width() % m != 0) {
    throw ConfigError("input " + std::to_string(x.width()) + "x" +
                      std::to_string(x.height()) +
                      " is not divisible by 2^" + std::to_string(cfg_.depth));
  }
  std::vector<Var> enc;
  enc.reserve(cfg_.depth);
  Var h = x;
  for (int i = 0; i < cfg_.depth; ++i) {
    h = down_[i](i == 0 ? h : nn::leaky_relu(h, 0.2));
    enc.push_back(h);
  }
  Var u = up_[cfg_.depth - 1](nn::relu(enc.back()));
  for (int j = cfg_.depth - 2; j >= 0; --j) {
    u = up_[j](nn::relu(nn::concat_channels({u, enc[j]})));
  }
  return nn::tanh01(u);
}

void UNet::collect(const std::string& prefix,
                   std::vector<nn::NamedParam>& out) const {
  for (std::size_t i = 0; i < down_.size(); ++i) {
    down_[i].collect(prefix + "/down" + std::to_string(i), out);
  }
  for (std::size_t j = 0; j < up_.size(); ++j) {
    up_[j].collect(prefix + "/up" + std::to_string(j), out);
  }
}

FusionNet::FusionNet(int in_channels, int width, int blocks, nn::Rng& rng)
    : head_(in_channels, width, 3, 1, 1, rng) {
  for (int b = 0; b < blocks; ++b) {
    nn::Conv2d c1(width, width, 3, 1, 1, rng);
    nn::Conv2d c2(width, width, 3, 1, 1, rng);
    blocks_.emplace_back(std::move(c1), std::move(c2));
  }
  tail_ = nn::Conv2d(width, 3, 3, 1, 1, rng);
}

Var FusionNet::operator()(const Var& x) const {
  Var h = nn::leaky_relu(head_(x), 0.2);
  for (const auto& [c1, c2] : blocks_) {
    h = nn::add(h, c2(nn::leaky_relu(c1(h), 0.2)));
  }
  return nn::tanh01(tail_(h));
}

void FusionNet::collect(const std::string& prefix,
                        std::vector<nn::NamedParam>& out) const {
  head_.collect(prefix + "/head", out);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    blocks_[b].first.collect(prefix + "/res" + std::to_string(b) + "a", out);
    blocks_[b].second.collect(prefix + "/res" + std::to_string(b) + "b", out);
  }
  tail_.collect(prefix + "/tail", out);
}

int patch_receptive_field(int layers) {
  int r = 1 + 3 + 3;  // the two stride-1 convolutions
  for (int i = 0; i < layers; ++i) r = 2 * r + 2;
  return r;
}

int fitting_disc_layers(int height, int width, int max_layers) {
  for (int n = max_layers; n >= 1; --n) {
    int h = height, w = width;
    for (int i = 0; i < n; ++i) {
      h = nn::conv_out_size(h, 4, 2, 1);
      w = nn::conv_out_size(w, 4, 2, 1);
    }
    for (int i = 0; i < 2; ++i) {
      h = nn::conv_out_size(h, 4, 1, 1);
      w = nn::conv_out_size(w, 4, 1, 1);
    }
    if (h >= 1 && w >= 1) return n;
  }
  return 0;
}

PatchDiscriminator::PatchDiscriminator(std::string name, int in_channels,
                                       int base_channels, int layers,
                                       nn::Rng& rng)
    : name_(std::move(name)), layers_(layers) {
  if (layers < 1) {
    throw ConfigError("discriminator " + name_ + " needs at least one layer");
  }
  auto width = [&](int i) { return base_channels * (1 << std::min(i, 3)); };
  int in = in_channels;
  for (int i = 0; i < layers; ++i) {
    convs_.emplace_back(in, width(i), 4, 2, 1, rng);
    in = width(i);
  }
  convs_.emplace_back(in, width(layers), 4, 1, 1, rng);
  convs_.emplace_back(width(layers), 1, 4, 1, 1, rng);
}

DiscOutput PatchDiscriminator::operator()(const Var& x) const {
  DiscOutput out;
  Var h = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i](h);
    const bool last = i + 1 == convs_.size();
    if (!last) h = nn::leaky_relu(h, 0.2);
    if (!h.value().all_finite()) {
      throw NumericError("non-finite activation in discriminator " + name_ +
                         " layer " + std::to_string(i));
    }
    if (!last) out.features.push_back(h);
  }
  out.logits = h;
  return out;
}

void PatchDiscriminator::collect(const std::string& prefix,
                                 std::vector<nn::NamedParam>& out) const {
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect(prefix + "/conv" + std::to_string(i), out);
  }
}

}  // namespace morphforge::gan
