#pragma once

#include <vector>

#include "taxrisk/dense.hpp"

namespace taxrisk {

struct AeConfig {
  std::size_t input_dim = 64;
  std::size_t latent_dim = 16;
  double threshold_quantile = 0.95;

  void validate() const;
};

struct AnomalyThreshold {
  double tau = 0.0;
  double calibration_quantile = 0.0;
  std::size_t calibration_count = 0;
};

// One relu encoder layer to d_z, one identity decoder layer back to the
// input width. Anomaly scoring is the per-sample squared reconstruction
// error against a quantile threshold calibrated on normal samples.
class Autoencoder {
 public:
  struct Cache {
    DenseLayer::Cache enc, dec;
  };

  Autoencoder() = default;
  Autoencoder(const AeConfig& cfg, Rng& rng);

  struct Output {
    Tensor latent;
    Tensor recon;
  };
  Output forward(const Tensor& z, Cache& cache) const;
  Output infer(const Tensor& z) const;
  // Backward through decoder then encoder; grads for dlatent (gradient
  // arriving at the latent from downstream use) and drecon are combined.
  Tensor backward(const Tensor& dlatent, const Tensor& drecon, Cache& cache);

  std::size_t input_dim() const { return encoder.in_dim(); }
  std::size_t latent_dim() const { return encoder.out_dim(); }
  std::vector<Parameter*> parameters();

  DenseLayer encoder;
  DenseLayer decoder;
};

// Per-sample squared Euclidean distance between rows of z and recon.
Tensor reconstruction_errors(const Tensor& z, const Tensor& recon);

// Linearly interpolated empirical q-quantile over the sorted errors.
// Requires at least 10 finite nonnegative values.
AnomalyThreshold calibrate_threshold(std::vector<double> errors, double q);

// Strict exceedance: error > tau.
bool flag_anomaly(double error, const AnomalyThreshold& th);

}  // namespace taxrisk
