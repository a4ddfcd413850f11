#pragma once

#include <vector>

#include "taxrisk/dense.hpp"
#include "taxrisk/tensor.hpp"

namespace taxrisk {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. step() consumes the
// accumulated grads and zeroes them afterwards. Non-finite gradients abort
// with DivergenceError naming the offending parameter.
class AdamState {
 public:
  AdamState(std::vector<Parameter*> params, AdamConfig config);

  void step();

  long long steps_taken() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long long t_ = 0;
};

}  // namespace taxrisk
