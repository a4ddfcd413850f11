#include "taxrisk/static_encoder.hpp"

#include "taxrisk/errors.hpp"

namespace taxrisk {

StaticEncoder::StaticEncoder(std::size_t input_dim,
                             const std::vector<std::size_t>& hidden, Rng& rng) {
  if (hidden.empty()) throw ConfigError("static branch needs at least one layer");
  std::size_t in = input_dim;
  for (std::size_t k = 0; k < hidden.size(); ++k) {
    layers_.emplace_back("static.l" + std::to_string(k), in, hidden[k],
                         Activation::Relu, rng);
    in = hidden[k];
  }
}

Tensor StaticEncoder::forward(const Tensor& x, Cache& cache) const {
  cache.layers.assign(layers_.size(), {});
  Tensor h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    h = layers_[k].forward(h, cache.layers[k]);
  }
  return h;
}

Tensor StaticEncoder::infer(const Tensor& x) const {
  Tensor h = x;
  for (const DenseLayer& l : layers_) h = l.infer(h);
  return h;
}

Tensor StaticEncoder::backward(const Tensor& dh, Cache& cache) {
  if (cache.layers.size() != layers_.size()) {
    throw StateError("static branch backward without matching forward");
  }
  Tensor d = dh;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    d = layers_[k].backward(d, cache.layers[k]);
  }
  return d;
}

std::vector<Parameter*> StaticEncoder::parameters() {
  std::vector<Parameter*> out;
  for (DenseLayer& l : layers_) {
    for (Parameter* p : l.parameters()) out.push_back(p);
  }
  return out;
}

}  // namespace taxrisk
