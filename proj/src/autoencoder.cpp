#include "taxrisk/autoencoder.hpp"

#include <algorithm>
#include <cmath>

#include "taxrisk/errors.hpp"

namespace taxrisk {

void AeConfig::validate() const {
  if (latent_dim == 0) throw ConfigError("autoencoder.latent_dim must be positive");
  if (latent_dim >= input_dim) {
    throw ConfigError("autoencoder.latent_dim " + std::to_string(latent_dim) +
                      " must compress below input width " + std::to_string(input_dim));
  }
  if (!(threshold_quantile > 0.0 && threshold_quantile < 1.0)) {
    throw ConfigError("autoencoder.threshold_quantile must lie in (0,1)");
  }
}

Autoencoder::Autoencoder(const AeConfig& cfg, Rng& rng) {
  cfg.validate();
  encoder = DenseLayer("ae.encoder", cfg.input_dim, cfg.latent_dim, Activation::Relu, rng);
  decoder = DenseLayer("ae.decoder", cfg.latent_dim, cfg.input_dim, Activation::Identity, rng);
}

Autoencoder::Output Autoencoder::forward(const Tensor& z, Cache& cache) const {
  Output out;
  out.latent = encoder.forward(z, cache.enc);
  out.recon = decoder.forward(out.latent, cache.dec);
  return out;
}

Autoencoder::Output Autoencoder::infer(const Tensor& z) const {
  Output out;
  out.latent = encoder.infer(z);
  out.recon = decoder.infer(out.latent);
  return out;
}

Tensor Autoencoder::backward(const Tensor& dlatent, const Tensor& drecon, Cache& cache) {
  Tensor dl = decoder.backward(drecon, cache.dec);
  for (std::size_t i = 0; i < dl.size(); ++i) dl[i] += dlatent[i];
  return encoder.backward(dl, cache.enc);
}

std::vector<Parameter*> Autoencoder::parameters() {
  return {&encoder.w, &encoder.b, &decoder.w, &decoder.b};
}

Tensor reconstruction_errors(const Tensor& z, const Tensor& recon) {
  if (z.shape() != recon.shape()) {
    throw DimensionError("reconstruction shapes differ: " + z.shape_str() + " vs " +
                         recon.shape_str());
  }
  const std::size_t rows = z.rows(), cols = z.cols();
  Tensor errors({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* a = z.data() + i * cols;
    const double* b = recon.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = a[j] - b[j];
      s += d * d;
    }
    errors[i] = s;
  }
  return errors;
}

AnomalyThreshold calibrate_threshold(std::vector<double> errors, double q) {
  if (!(q > 0.0 && q < 1.0)) throw CalibrationError("quantile must lie in (0,1)");
  if (errors.size() < 10) {
    throw CalibrationError("threshold calibration needs at least 10 errors, got " +
                           std::to_string(errors.size()));
  }
  for (double e : errors) {
    if (!std::isfinite(e) || e < 0.0) {
      throw CalibrationError("calibration errors must be finite and nonnegative");
    }
  }
  std::sort(errors.begin(), errors.end());
  const double h = static_cast<double>(errors.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  double tau = errors[lo];
  if (frac > 0.0) tau += frac * (errors[lo + 1] - errors[lo]);
  return AnomalyThreshold{tau, q, errors.size()};
}

bool flag_anomaly(double error, const AnomalyThreshold& th) {
  if (!std::isfinite(error) || error < 0.0) {
    throw InvalidInputError("anomaly score must be finite and nonnegative");
  }
  return error > th.tau;
}

}  // namespace taxrisk
