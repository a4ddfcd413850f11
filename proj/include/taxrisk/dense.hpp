#pragma once

#include <string>
#include <vector>

#include "taxrisk/rng.hpp"
#include "taxrisk/tensor.hpp"

namespace taxrisk {

// Trainable tensor plus its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { std::fill(grad.values().begin(), grad.values().end(), 0.0); }
};

enum class Activation { Identity, Relu, Sigmoid };

// Glorot-uniform fill: +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// y = act(x W + b). Forward fills a caller-owned cache that backward then
// consumes; layers themselves stay const during forward so one instance can
// serve concurrent evaluations. A layer built with with_bias = false drops b
// entirely; attention key projections use this because a key bias shifts
// every logit in a row equally and softmax cancels it, leaving a parameter
// the loss can never see.
class DenseLayer {
 public:
  struct Cache {
    Tensor x;        // input
    Tensor pre;      // x W + b, kept only for relu masking
    bool ready = false;
  };

  DenseLayer() = default;
  DenseLayer(const std::string& name, std::size_t in, std::size_t out,
             Activation act, Rng& rng, bool with_bias = true);

  Tensor forward(const Tensor& x, Cache& cache) const;
  // Forward without recording anything; for inference paths.
  Tensor infer(const Tensor& x) const;
  // Accumulates into w/b grads, consumes the cache, returns dx.
  Tensor backward(const Tensor& dy, Cache& cache);

  std::size_t in_dim() const { return w.value.rows(); }
  std::size_t out_dim() const { return w.value.cols(); }
  std::vector<Parameter*> parameters() {
    if (!has_bias) return {&w};
    return {&w, &b};
  }

  Parameter w;
  Parameter b;  // kept all-zero when has_bias is false
  Activation activation = Activation::Identity;
  bool has_bias = true;
};

}  // namespace taxrisk
