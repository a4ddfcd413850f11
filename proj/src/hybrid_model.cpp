#include "taxrisk/hybrid_model.hpp"

#include "taxrisk/errors.hpp"
#include "taxrisk/fusion.hpp"
#include "taxrisk/ops.hpp"

namespace taxrisk {

void ModelConfig::validate() const {
  if (static_dim == 0) throw ConfigError("model.static_dim must be positive");
  if (static_hidden.empty()) throw ConfigError("model.static_hidden must not be empty");
  for (std::size_t w : static_hidden) {
    if (w == 0) throw ConfigError("model.static_hidden widths must be positive");
  }
  transformer.validate();
  AeConfig ae{d_s() + d_t(), ae_latent, threshold_quantile};
  ae.validate();
}

HybridModel::HybridModel(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  static_enc = StaticEncoder(cfg.static_dim, cfg.static_hidden, rng);
  temporal_enc = TemporalEncoder(cfg.transformer, rng);
  ae = Autoencoder(AeConfig{cfg.d_s() + cfg.d_t(), cfg.ae_latent, cfg.threshold_quantile}, rng);
  head = DenseLayer("head", cfg.d_s() + cfg.d_t() + cfg.ae_latent, 3,
                    Activation::Identity, rng);
}

HybridModel::Output HybridModel::forward(const Tensor& x_static, const Tensor& x_series,
                                         const Tensor& mask, Cache& cache) const {
  if (x_static.rows() != x_series.shape()[0]) {
    throw DimensionError("static batch " + std::to_string(x_static.rows()) +
                         " vs series batch " + std::to_string(x_series.shape()[0]));
  }
  Tensor h_s = static_enc.forward(x_static, cache.stat);
  Tensor h_t = temporal_enc.forward(x_series, mask, cache.temp);
  cache.zcat = concat_cols({&h_s, &h_t});
  Autoencoder::Output ae_out = ae.forward(cache.zcat, cache.ae);
  cache.recon = ae_out.recon;
  Tensor fused = concat_cols({&cache.zcat, &ae_out.latent});
  Tensor logits = head.forward(fused, cache.head_cache);
  cache.probs = softmax_rows(logits);
  cache.ready = true;
  return Output{cache.probs, reconstruction_errors(cache.zcat, cache.recon)};
}

HybridModel::Output HybridModel::infer(const Tensor& x_static, const Tensor& x_series,
                                       const Tensor& mask) const {
  Cache scratch;
  return forward(x_static, x_series, mask, scratch);
}

double HybridModel::backward(Cache& cache, const std::vector<int>& labels,
                             const std::vector<bool>& normal_mask, double lambda_ae) {
  if (!cache.ready) throw StateError("model backward without a matching forward");
  cache.ready = false;
  const std::size_t batch = cache.probs.rows();
  if (labels.size() != batch || normal_mask.size() != batch) {
    throw DimensionError("labels/mask size does not match batch " + std::to_string(batch));
  }
  const std::size_t dz_width = cache.zcat.cols();

  Tensor errors = reconstruction_errors(cache.zcat, cache.recon);
  const double loss = total_loss(cache.probs, labels, errors, normal_mask, lambda_ae);

  // Fused softmax + cross-entropy: dlogits = (probs - onehot) / batch.
  Tensor dlogits = cache.probs;
  for (std::size_t i = 0; i < batch; ++i) {
    dlogits(i, static_cast<std::size_t>(labels[i])) -= 1.0;
  }
  for (double& v : dlogits.values()) v /= static_cast<double>(batch);

  Tensor dfused = head.backward(dlogits, cache.head_cache);
  Tensor dz_head = slice_cols(dfused, 0, dz_width);
  Tensor dlatent = slice_cols(dfused, dz_width, cfg_.ae_latent);

  // Reconstruction term: d/dZ lambda/m * sum_masked ||Z - recon||^2.
  std::size_t masked = 0;
  for (bool b : normal_mask) masked += b ? 1 : 0;
  Tensor drecon = Tensor::matrix(batch, dz_width);
  if (masked > 0 && lambda_ae > 0.0) {
    const double scale = 2.0 * lambda_ae / static_cast<double>(masked);
    for (std::size_t i = 0; i < batch; ++i) {
      if (!normal_mask[i]) continue;
      for (std::size_t j = 0; j < dz_width; ++j) {
        const double diff = scale * (cache.zcat(i, j) - cache.recon(i, j));
        dz_head(i, j) += diff;
        drecon(i, j) = -diff;
      }
    }
  }

  Tensor dz_enc = ae.backward(dlatent, drecon, cache.ae);
  for (std::size_t i = 0; i < dz_head.size(); ++i) dz_head[i] += dz_enc[i];

  Tensor dh_s = slice_cols(dz_head, 0, cfg_.d_s());
  Tensor dh_t = slice_cols(dz_head, cfg_.d_s(), cfg_.d_t());
  static_enc.backward(dh_s, cache.stat);
  temporal_enc.backward(dh_t, cache.temp);
  return loss;
}

std::vector<Parameter*> HybridModel::parameters() {
  std::vector<Parameter*> out;
  for (Parameter* p : static_enc.parameters()) out.push_back(p);
  for (Parameter* p : temporal_enc.parameters()) out.push_back(p);
  for (Parameter* p : ae.parameters()) out.push_back(p);
  for (Parameter* p : head.parameters()) out.push_back(p);
  return out;
}

}  // namespace taxrisk
