#pragma once

#include <vector>

#include "taxrisk/dense.hpp"
#include "taxrisk/tensor.hpp"

namespace taxrisk {

struct TransformerConfig {
  std::size_t series_dim = 4;
  std::size_t seq_len = 12;
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t n_blocks = 2;
  std::size_t d_ff = 64;

  std::size_t d_k() const { return d_model / n_heads; }
  void validate() const;
};

// Fixed sinusoidal table: [pos, 2i] = sin(pos / 10000^(2i/d_model)),
// [pos, 2i+1] = cos of the same argument.
Tensor positional_encoding(std::size_t seq_len, std::size_t d_model);

// Z_0 = x_t W_e + PE, with PE broadcast over the batch. x_t is
// [batch, seq, s]; result is [batch, seq, d_model].
Tensor embed_sequence(const Tensor& w_e, const Tensor& pe, const Tensor& x_t);

// Single-head scaled dot-product attention: softmax_rows(Q K^T / sqrt(d_k)) V.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Affine-free layer normalization across the last axis, eps 1e-9. Has no
// trainable parameters; outputs have per-row mean 0 and unit variance.
class LayerNorm {
 public:
  static constexpr double kEps = 1e-9;

  struct Cache {
    Tensor y;
    std::vector<double> inv_std;
    bool ready = false;
  };

  Tensor forward(const Tensor& x, Cache& cache) const;
  Tensor backward(const Tensor& dy, Cache& cache) const;
};

// Post-norm residual block: Z1 = LN(Z + MHSA(Z)); out = LN(Z1 + FF(Z1)).
// The feed-forward is d_model -> d_ff (relu) -> d_model. Sequences are
// carried flattened as [batch*seq, d_model]; attention runs per batch item
// on per-head column slices of full-width Q/K/V projections.
class EncoderBlock {
 public:
  struct Cache {
    DenseLayer::Cache q, k, v, o, ff1, ff2;
    LayerNorm::Cache ln1, ln2;
    Tensor qm, km, vm;            // projected activations
    std::vector<Tensor> weights;  // attention rows per (batch, head)
    std::size_t batch = 0;
    std::size_t seq = 0;
    bool ready = false;
  };

  EncoderBlock() = default;
  EncoderBlock(const TransformerConfig& cfg, std::size_t index, Rng& rng);

  Tensor forward(const Tensor& z, std::size_t batch, std::size_t seq, Cache& cache) const;
  Tensor backward(const Tensor& dz, Cache& cache);
  std::vector<Parameter*> parameters();

 private:
  Tensor attend(const Tensor& qm, const Tensor& km, const Tensor& vm,
                std::size_t batch, std::size_t seq,
                std::vector<Tensor>* weights_out) const;

  DenseLayer q_, k_, v_, o_, ff1_, ff2_;
  LayerNorm ln1_, ln2_;
  std::size_t n_heads_ = 0;
  std::size_t d_k_ = 0;
};

// Quarterly-series branch: embedding + positional encoding, n_blocks
// encoder blocks, then a mean over time restricted to positions the padding
// mask marks valid. The mask never gates attention, only the pooling.
class TemporalEncoder {
 public:
  struct Cache {
    Tensor x_flat;  // [batch*seq, s], kept for the embedding gradient
    std::vector<EncoderBlock::Cache> blocks;
    Tensor mask;
    std::vector<double> counts;
    bool ready = false;
  };

  TemporalEncoder() = default;
  TemporalEncoder(const TransformerConfig& cfg, Rng& rng);

  // x_t: [batch, seq, s]; mask: [batch, seq] of 0/1. Returns [batch, d_model].
  Tensor forward(const Tensor& x_t, const Tensor& mask, Cache& cache) const;
  Tensor infer(const Tensor& x_t, const Tensor& mask) const;
  void backward(const Tensor& dht, Cache& cache);

  std::size_t out_dim() const { return cfg_.d_model; }
  const TransformerConfig& config() const { return cfg_; }
  std::vector<Parameter*> parameters();

  Parameter embed;  // W_e, [s, d_model], no bias
  Tensor pe;        // sinusoidal by default; replaceable in tests

 private:
  TransformerConfig cfg_;
  std::vector<EncoderBlock> blocks_;
};

}  // namespace taxrisk
