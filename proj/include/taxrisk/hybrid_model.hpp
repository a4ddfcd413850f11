#pragma once

#include <vector>

#include "taxrisk/autoencoder.hpp"
#include "taxrisk/dense.hpp"
#include "taxrisk/static_encoder.hpp"
#include "taxrisk/temporal_encoder.hpp"

namespace taxrisk {

struct ModelConfig {
  std::size_t static_dim = 0;  // width of the preprocessed static vector
  std::vector<std::size_t> static_hidden{64, 32};
  TransformerConfig transformer;
  std::size_t ae_latent = 16;
  double threshold_quantile = 0.95;

  std::size_t d_s() const { return static_hidden.empty() ? 0 : static_hidden.back(); }
  std::size_t d_t() const { return transformer.d_model; }
  void validate() const;
};

// Static branch + temporal branch, concatenated to Z = [h_s | h_t], passed
// through the anomaly autoencoder, fused as H = [h_s | h_t | z], classified
// by a single linear head with softmax. Trains jointly: cross-entropy plus
// lambda_ae times the reconstruction error averaged over low-risk samples.
class HybridModel {
 public:
  struct Cache {
    StaticEncoder::Cache stat;
    TemporalEncoder::Cache temp;
    Autoencoder::Cache ae;
    DenseLayer::Cache head_cache;
    Tensor zcat;   // [batch, d_s + d_t]
    Tensor recon;  // decoder output, same shape as zcat
    Tensor probs;  // [batch, 3]
    bool ready = false;
  };

  struct Output {
    Tensor probs;
    Tensor recon_errors;  // per-sample squared reconstruction error
  };

  HybridModel() = default;
  HybridModel(const ModelConfig& cfg, Rng& rng);

  Output forward(const Tensor& x_static, const Tensor& x_series,
                 const Tensor& mask, Cache& cache) const;
  Output infer(const Tensor& x_static, const Tensor& x_series, const Tensor& mask) const;

  // Accumulates gradients for the joint objective and returns its value.
  double backward(Cache& cache, const std::vector<int>& labels,
                  const std::vector<bool>& normal_mask, double lambda_ae);

  std::vector<Parameter*> parameters();
  const ModelConfig& config() const { return cfg_; }

  StaticEncoder static_enc;
  TemporalEncoder temporal_enc;
  Autoencoder ae;
  DenseLayer head;
  AnomalyThreshold threshold;

 private:
  ModelConfig cfg_;
};

}  // namespace taxrisk
