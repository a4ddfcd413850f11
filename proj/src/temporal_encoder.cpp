#include "taxrisk/temporal_encoder.hpp"

#include <cmath>

#include "taxrisk/errors.hpp"
#include "taxrisk/ops.hpp"

namespace taxrisk {

void TransformerConfig::validate() const {
  if (series_dim == 0) throw ConfigError("transformer.series_dim must be positive");
  if (seq_len == 0) throw ConfigError("transformer.seq_len must be at least 1");
  if (d_model == 0 || n_heads == 0) throw ConfigError("transformer d_model and n_heads must be positive");
  if (d_model % n_heads != 0) {
    throw ConfigError("transformer.d_model " + std::to_string(d_model) +
                      " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (d_ff == 0) throw ConfigError("transformer.d_ff must be positive");
}

Tensor positional_encoding(std::size_t seq_len, std::size_t d_model) {
  Tensor pe = Tensor::matrix(seq_len, d_model);
  for (std::size_t pos = 0; pos < seq_len; ++pos) {
    for (std::size_t i = 0; 2 * i < d_model; ++i) {
      const double angle = static_cast<double>(pos) /
          std::pow(10000.0, (2.0 * static_cast<double>(i)) / static_cast<double>(d_model));
      pe(pos, 2 * i) = std::sin(angle);
      if (2 * i + 1 < d_model) pe(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Tensor embed_sequence(const Tensor& w_e, const Tensor& pe, const Tensor& x_t) {
  if (x_t.rank() != 3) {
    throw DimensionError("embed_sequence expects [batch, seq, s], got " + x_t.shape_str());
  }
  const std::size_t batch = x_t.shape()[0];
  const std::size_t seq = x_t.shape()[1];
  const std::size_t s = x_t.shape()[2];
  if (seq != pe.rows()) {
    throw DimensionError("sequence length " + std::to_string(seq) +
                         " does not match positional table rows " + std::to_string(pe.rows()));
  }
  if (s != w_e.rows()) {
    throw DimensionError("series width " + std::to_string(s) +
                         " does not match embedding rows " + std::to_string(w_e.rows()));
  }
  const std::size_t d_model = w_e.cols();
  Tensor z = matmul(x_t.reshaped({batch * seq, s}), w_e);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < seq; ++t) {
      double* row = z.data() + (b * seq + t) * d_model;
      const double* perow = pe.data() + t * d_model;
      for (std::size_t j = 0; j < d_model; ++j) row[j] += perow[j];
    }
  }
  return z.reshaped({batch, seq, d_model});
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.cols() != k.cols()) {
    throw DimensionError("attention query width " + q.shape_str() +
                         " vs key width " + k.shape_str());
  }
  if (k.rows() != v.rows()) {
    throw DimensionError("attention key rows " + k.shape_str() +
                         " vs value rows " + v.shape_str());
  }
  Tensor scores = matmul_nt(q, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  for (double& x : scores.values()) x *= scale;
  return matmul(softmax_rows(scores), v);
}

Tensor LayerNorm::forward(const Tensor& x, Cache& cache) const {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (cols < 2) throw DimensionError("layer norm needs width >= 2, got " + x.shape_str());
  Tensor y(x.shape());
  cache.inv_std.assign(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* in = x.data() + i * cols;
    double* out = y.data() + i * cols;
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += in[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = in[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + kEps);
    cache.inv_std[i] = inv;
    for (std::size_t j = 0; j < cols; ++j) out[j] = (in[j] - mean) * inv;
  }
  cache.y = y;
  cache.ready = true;
  return y;
}

Tensor LayerNorm::backward(const Tensor& dy, Cache& cache) const {
  if (!cache.ready) throw StateError("layer norm backward without forward");
  cache.ready = false;
  const std::size_t rows = dy.rows(), cols = dy.cols();
  Tensor dx(dy.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* g = dy.data() + i * cols;
    const double* y = cache.y.data() + i * cols;
    double* out = dx.data() + i * cols;
    double mg = 0.0, mgy = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      mg += g[j];
      mgy += g[j] * y[j];
    }
    mg /= static_cast<double>(cols);
    mgy /= static_cast<double>(cols);
    const double inv = cache.inv_std[i];
    for (std::size_t j = 0; j < cols; ++j) out[j] = inv * (g[j] - mg - y[j] * mgy);
  }
  return dx;
}

EncoderBlock::EncoderBlock(const TransformerConfig& cfg, std::size_t index, Rng& rng)
    : n_heads_(cfg.n_heads), d_k_(cfg.d_k()) {
  const std::string base = "temporal.block" + std::to_string(index);
  q_ = DenseLayer(base + ".q", cfg.d_model, cfg.d_model, Activation::Identity, rng);
  // No key bias: softmax removes any per-row constant, so a key bias would be
  // invisible to the loss and sit at zero gradient forever.
  k_ = DenseLayer(base + ".k", cfg.d_model, cfg.d_model, Activation::Identity, rng,
                  /*with_bias=*/false);
  v_ = DenseLayer(base + ".v", cfg.d_model, cfg.d_model, Activation::Identity, rng);
  o_ = DenseLayer(base + ".o", cfg.d_model, cfg.d_model, Activation::Identity, rng);
  ff1_ = DenseLayer(base + ".ff1", cfg.d_model, cfg.d_ff, Activation::Relu, rng);
  ff2_ = DenseLayer(base + ".ff2", cfg.d_ff, cfg.d_model, Activation::Identity, rng);
}

namespace {
// Extract the [seq, d_k] slice for (batch item b, head h) from a flattened
// [batch*seq, d_model] matrix.
Tensor head_block(const Tensor& m, std::size_t b, std::size_t seq,
                  std::size_t h, std::size_t d_k) {
  Tensor out = Tensor::matrix(seq, d_k);
  const std::size_t d_model = m.cols();
  for (std::size_t t = 0; t < seq; ++t) {
    const double* src = m.data() + (b * seq + t) * d_model + h * d_k;
    std::copy(src, src + d_k, out.data() + t * d_k);
  }
  return out;
}

void add_head_block(Tensor& m, std::size_t b, std::size_t seq, std::size_t h,
                    std::size_t d_k, const Tensor& src) {
  const std::size_t d_model = m.cols();
  for (std::size_t t = 0; t < seq; ++t) {
    double* dst = m.data() + (b * seq + t) * d_model + h * d_k;
    const double* s = src.data() + t * d_k;
    for (std::size_t j = 0; j < d_k; ++j) dst[j] += s[j];
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}
}  // namespace

Tensor EncoderBlock::attend(const Tensor& qm, const Tensor& km, const Tensor& vm,
                            std::size_t batch, std::size_t seq,
                            std::vector<Tensor>* weights_out) const {
  Tensor concat = Tensor::matrix(batch * seq, qm.cols());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k_));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < n_heads_; ++h) {
      const Tensor qh = head_block(qm, b, seq, h, d_k_);
      const Tensor kh = head_block(km, b, seq, h, d_k_);
      const Tensor vh = head_block(vm, b, seq, h, d_k_);
      Tensor scores = matmul_nt(qh, kh);
      for (double& x : scores.values()) x *= scale;
      Tensor a = softmax_rows(scores);
      add_head_block(concat, b, seq, h, d_k_, matmul(a, vh));
      if (weights_out) weights_out->push_back(std::move(a));
    }
  }
  return concat;
}

Tensor EncoderBlock::forward(const Tensor& z, std::size_t batch, std::size_t seq,
                             Cache& cache) const {
  cache.qm = q_.forward(z, cache.q);
  cache.km = k_.forward(z, cache.k);
  cache.vm = v_.forward(z, cache.v);
  cache.weights.clear();
  Tensor concat = attend(cache.qm, cache.km, cache.vm, batch, seq, &cache.weights);
  Tensor attn_out = o_.forward(concat, cache.o);
  Tensor z1 = ln1_.forward(add(z, attn_out), cache.ln1);
  Tensor ff = ff2_.forward(ff1_.forward(z1, cache.ff1), cache.ff2);
  Tensor out = ln2_.forward(add(z1, ff), cache.ln2);
  cache.batch = batch;
  cache.seq = seq;
  cache.ready = true;
  return out;
}

Tensor EncoderBlock::backward(const Tensor& dz, Cache& cache) {
  if (!cache.ready) throw StateError("encoder block backward without forward");
  cache.ready = false;
  const std::size_t batch = cache.batch, seq = cache.seq;

  Tensor g2 = ln2_.backward(dz, cache.ln2);          // d(z1 + ff)
  Tensor dz1 = add(g2, ff1_.backward(ff2_.backward(g2, cache.ff2), cache.ff1));
  Tensor g1 = ln1_.backward(dz1, cache.ln1);         // d(z + attn_out)
  Tensor dconcat = o_.backward(g1, cache.o);

  Tensor dqm = Tensor::matrix(batch * seq, cache.qm.cols());
  Tensor dkm(dqm.shape());
  Tensor dvm(dqm.shape());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k_));
  std::size_t slot = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < n_heads_; ++h, ++slot) {
      const Tensor& a = cache.weights[slot];
      const Tensor dout = head_block(dconcat, b, seq, h, d_k_);
      const Tensor qh = head_block(cache.qm, b, seq, h, d_k_);
      const Tensor kh = head_block(cache.km, b, seq, h, d_k_);
      const Tensor vh = head_block(cache.vm, b, seq, h, d_k_);

      add_head_block(dvm, b, seq, h, d_k_, matmul_tn(a, dout));
      Tensor da = matmul_nt(dout, vh);
      // Softmax jacobian row-wise: ds = a .* (da - sum(da .* a)).
      Tensor ds(da.shape());
      for (std::size_t i = 0; i < seq; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < seq; ++j) dot += da(i, j) * a(i, j);
        for (std::size_t j = 0; j < seq; ++j) ds(i, j) = a(i, j) * (da(i, j) - dot);
      }
      for (double& x : ds.values()) x *= scale;
      add_head_block(dqm, b, seq, h, d_k_, matmul(ds, kh));
      add_head_block(dkm, b, seq, h, d_k_, matmul_tn(ds, qh));
    }
  }

  Tensor dz_in = q_.backward(dqm, cache.q);
  dz_in = add(dz_in, k_.backward(dkm, cache.k));
  dz_in = add(dz_in, v_.backward(dvm, cache.v));
  return add(dz_in, g1);
}

std::vector<Parameter*> EncoderBlock::parameters() {
  std::vector<Parameter*> out;
  for (DenseLayer* l : {&q_, &k_, &v_, &o_, &ff1_, &ff2_}) {
    for (Parameter* p : l->parameters()) out.push_back(p);
  }
  return out;
}

TemporalEncoder::TemporalEncoder(const TransformerConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  embed = Parameter("temporal.embed", Tensor::matrix(cfg.series_dim, cfg.d_model));
  glorot_uniform(embed.value, cfg.series_dim, cfg.d_model, rng);
  pe = positional_encoding(cfg.seq_len, cfg.d_model);
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) blocks_.emplace_back(cfg_, i, rng);
}

namespace {
void check_temporal_input(const Tensor& x_t, const Tensor& mask,
                          const TransformerConfig& cfg) {
  if (x_t.rank() != 3 || x_t.shape()[1] != cfg.seq_len || x_t.shape()[2] != cfg.series_dim) {
    throw DimensionError("series tensor " + x_t.shape_str() + " does not match [batch," +
                         std::to_string(cfg.seq_len) + "," + std::to_string(cfg.series_dim) + "]");
  }
  if (mask.rank() != 2 || mask.rows() != x_t.shape()[0] || mask.cols() != cfg.seq_len) {
    throw DimensionError("mask " + mask.shape_str() + " does not match series batch");
  }
}
}  // namespace

Tensor TemporalEncoder::forward(const Tensor& x_t, const Tensor& mask, Cache& cache) const {
  check_temporal_input(x_t, mask, cfg_);
  const std::size_t batch = x_t.shape()[0];
  const std::size_t seq = cfg_.seq_len;

  cache.x_flat = x_t.reshaped({batch * seq, cfg_.series_dim});
  Tensor z = embed_sequence(embed.value, pe, x_t).reshaped({batch * seq, cfg_.d_model});
  cache.blocks.assign(blocks_.size(), {});
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    z = blocks_[i].forward(z, batch, seq, cache.blocks[i]);
  }

  cache.mask = mask;
  cache.counts.assign(batch, 0.0);
  Tensor ht = Tensor::matrix(batch, cfg_.d_model);
  for (std::size_t b = 0; b < batch; ++b) {
    double count = 0.0;
    for (std::size_t t = 0; t < seq; ++t) {
      if (mask(b, t) <= 0.5) continue;
      count += 1.0;
      const double* row = z.data() + (b * seq + t) * cfg_.d_model;
      for (std::size_t j = 0; j < cfg_.d_model; ++j) ht(b, j) += row[j];
    }
    if (count == 0.0) {
      throw InvalidInputError("sample " + std::to_string(b) + " has no valid quarters to pool");
    }
    for (std::size_t j = 0; j < cfg_.d_model; ++j) ht(b, j) /= count;
    cache.counts[b] = count;
  }
  cache.ready = true;
  return ht;
}

Tensor TemporalEncoder::infer(const Tensor& x_t, const Tensor& mask) const {
  Cache scratch;
  return forward(x_t, mask, scratch);
}

void TemporalEncoder::backward(const Tensor& dht, Cache& cache) {
  if (!cache.ready) throw StateError("temporal branch backward without forward");
  cache.ready = false;
  const std::size_t batch = cache.mask.rows();
  const std::size_t seq = cfg_.seq_len;

  Tensor dz = Tensor::matrix(batch * seq, cfg_.d_model);
  for (std::size_t b = 0; b < batch; ++b) {
    const double inv = 1.0 / cache.counts[b];
    for (std::size_t t = 0; t < seq; ++t) {
      if (cache.mask(b, t) <= 0.5) continue;
      double* row = dz.data() + (b * seq + t) * cfg_.d_model;
      const double* g = dht.data() + b * cfg_.d_model;
      for (std::size_t j = 0; j < cfg_.d_model; ++j) row[j] += g[j] * inv;
    }
  }

  for (std::size_t i = blocks_.size(); i-- > 0;) {
    dz = blocks_[i].backward(dz, cache.blocks[i]);
  }

  Tensor dwe = matmul_tn(cache.x_flat, dz);
  for (std::size_t i = 0; i < dwe.size(); ++i) embed.grad[i] += dwe[i];
}

std::vector<Parameter*> TemporalEncoder::parameters() {
  std::vector<Parameter*> out{&embed};
  for (EncoderBlock& b : blocks_) {
    for (Parameter* p : b.parameters()) out.push_back(p);
  }
  return out;
}

}  // namespace taxrisk
