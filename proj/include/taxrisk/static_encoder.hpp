#pragma once

#include <vector>

#include "taxrisk/dense.hpp"

namespace taxrisk {

// Feedforward branch for static firm features: a stack of relu layers whose
// last width is the static representation size.
class StaticEncoder {
 public:
  struct Cache {
    std::vector<DenseLayer::Cache> layers;
  };

  StaticEncoder() = default;
  StaticEncoder(std::size_t input_dim, const std::vector<std::size_t>& hidden, Rng& rng);

  Tensor forward(const Tensor& x, Cache& cache) const;
  Tensor infer(const Tensor& x) const;
  Tensor backward(const Tensor& dh, Cache& cache);

  std::size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  std::vector<Parameter*> parameters();

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace taxrisk
