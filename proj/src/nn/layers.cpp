#include "morphforge/nn/layers.hpp"

namespace morphforge::nn {

Tensor normal_tensor(int c, int h, int w, double stddev, Rng& rng) {
  Tensor t(c, h, w);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride,
               int pad, Rng& rng, double stddev, bool trainable)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      weight_(normal_tensor(out_channels, in_channels * kernel * kernel, 1,
                            stddev, rng),
              trainable),
      bias_(Tensor(out_channels, 1, 1), trainable) {}

void Conv2d::collect(const std::string& prefix,
                     std::vector<NamedParam>& out) const {
  out.push_back({prefix + "/weight", weight_});
  out.push_back({prefix + "/bias", bias_});
}

ConvTranspose2d::ConvTranspose2d(int in_channels, int out_channels, int kernel,
                                 int stride, int pad, Rng& rng, double stddev)
    : kernel_(kernel),
      stride_(stride),
      pad_(pad),
      weight_(normal_tensor(in_channels, out_channels * kernel * kernel, 1,
                            stddev, rng),
              true),
      bias_(Tensor(out_channels, 1, 1), true) {}

void ConvTranspose2d::collect(const std::string& prefix,
                              std::vector<NamedParam>& out) const {
  out.push_back({prefix + "/weight", weight_});
  out.push_back({prefix + "/bias", bias_});
}

Linear::Linear(int in_features, int out_features, Rng& rng, double stddev,
               bool trainable)
    : weight_(normal_tensor(out_features, in_features, 1, stddev, rng),
              trainable),
      bias_(Tensor(out_features, 1, 1), trainable) {}

void Linear::collect(const std::string& prefix,
                     std::vector<NamedParam>& out) const {
  out.push_back({prefix + "/weight", weight_});
  out.push_back({prefix + "/bias", bias_});
}

std::vector<Var> vars_of(const std::vector<NamedParam>& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

std::size_t parameter_count(const std::vector<NamedParam>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.var.value().size();
  return n;
}

}  // namespace morphforge::nn
