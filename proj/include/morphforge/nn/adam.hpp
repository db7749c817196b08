#pragma once

#include <vector>

#include "morphforge/nn/var.hpp"

namespace morphforge::nn {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamConfig config);

  void step();
  void zero_grad();
  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  AdamConfig config_;
  long t_ = 0;
};

}  // namespace morphforge::nn
