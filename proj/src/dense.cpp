#include "taxrisk/dense.hpp"

#include <cmath>

#include "taxrisk/errors.hpp"
#include "taxrisk/ops.hpp"

namespace taxrisk {

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.values()) v = rng.uniform(-limit, limit);
}

DenseLayer::DenseLayer(const std::string& name, std::size_t in, std::size_t out,
                       Activation act, Rng& rng, bool with_bias)
    : w(name + ".w", Tensor::matrix(in, out)),
      b(name + ".b", Tensor::matrix(1, out)),
      activation(act),
      has_bias(with_bias) {
  glorot_uniform(w.value, in, out, rng);
}

namespace {
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b, bool has_bias) {
  Tensor pre = matmul(x, w);
  if (!has_bias) return pre;
  const std::size_t n = pre.cols();
  for (std::size_t i = 0; i < pre.rows(); ++i) {
    double* row = pre.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += b[j];
  }
  return pre;
}

Tensor activate(const Tensor& pre, Activation act) {
  if (act == Activation::Identity) return pre;
  if (act == Activation::Relu) return relu(pre);
  Tensor out(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-pre[i]));
  return out;
}

void check_input(const Tensor& x, const Parameter& w, std::size_t in_dim) {
  if (x.cols() != in_dim) {
    throw DimensionError(w.name + " expects " + std::to_string(in_dim) +
                         " inputs, got " + x.shape_str());
  }
  if (!x.all_finite()) {
    throw InvalidInputError(w.name + " received non-finite input");
  }
}
}  // namespace

Tensor DenseLayer::forward(const Tensor& x, Cache& cache) const {
  check_input(x, w, in_dim());
  Tensor pre = affine(x, w.value, b.value, has_bias);
  cache.x = x;
  cache.pre = pre;
  cache.ready = true;
  return activate(pre, activation);
}

Tensor DenseLayer::infer(const Tensor& x) const {
  check_input(x, w, in_dim());
  return activate(affine(x, w.value, b.value, has_bias), activation);
}

Tensor DenseLayer::backward(const Tensor& dy, Cache& cache) {
  if (!cache.ready) {
    throw StateError(w.name + " backward called without a matching forward");
  }
  cache.ready = false;
  Tensor dpre = dy;
  if (activation == Activation::Relu) {
    dpre = relu_backward(dy, cache.pre);
  } else if (activation == Activation::Sigmoid) {
    dpre = Tensor(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-cache.pre[i]));
      dpre[i] = dy[i] * s * (1.0 - s);
    }
  }
  Tensor dw = matmul_tn(cache.x, dpre);
  for (std::size_t i = 0; i < dw.size(); ++i) w.grad[i] += dw[i];
  if (has_bias) {
    const std::size_t n = dpre.cols();
    for (std::size_t i = 0; i < dpre.rows(); ++i) {
      const double* row = dpre.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) b.grad[j] += row[j];
    }
  }
  return matmul_nt(dpre, w.value);
}

}  // namespace taxrisk
