#include <cmath>

#include <doctest.h>

#include "taxrisk/errors.hpp"
#include "taxrisk/gradcheck.hpp"
#include "taxrisk/ops.hpp"
#include "taxrisk/temporal_encoder.hpp"
#include "test_util.hpp"

using namespace taxrisk;
using testutil::mat;

TEST_CASE("positional encoding matches its defining formula") {
  const std::size_t seq = 12, dm = 32;
  const Tensor pe = positional_encoding(seq, dm);
  CHECK(pe.rows() == seq);
  CHECK(pe.cols() == dm);

  // Row 0 alternates sin(0)=0 and cos(0)=1.
  for (std::size_t j = 0; j < dm; j += 2) {
    CHECK(pe(0, j) == 0.0);
    CHECK(pe(0, j + 1) == 1.0);
  }
  for (std::size_t p = 0; p < seq; ++p) {
    for (std::size_t j = 0; j < dm; j += 2) {
      const double arg =
          static_cast<double>(p) /
          std::pow(10000.0, static_cast<double>(j) / static_cast<double>(dm));
      CHECK(pe(p, j) == doctest::Approx(std::sin(arg)).epsilon(1e-15));
      CHECK(pe(p, j + 1) == doctest::Approx(std::cos(arg)).epsilon(1e-15));
      CHECK(std::abs(pe(p, j)) <= 1.0);
    }
  }
}

TEST_CASE("embed_sequence applies the projection then adds the table") {
  SUBCASE("identity projection, one step") {
    const Tensor w_e = mat({{1, 0}, {0, 1}});
    const Tensor pe = positional_encoding(1, 2);
    const Tensor x = Tensor({1, 1, 2}, 1.0);
    const Tensor z = embed_sequence(w_e, pe, x);
    CHECK(z.shape() == std::vector<std::size_t>{1, 1, 2});
    CHECK(z[0] == 1.0);  // 1 + sin(0)
    CHECK(z[1] == 2.0);  // 1 + cos(0)
  }

  SUBCASE("zero input broadcasts the table over the batch") {
    const Tensor w_e = Tensor::matrix(4, 6);
    const Tensor pe = positional_encoding(3, 6);
    const Tensor x({2, 3, 4}, 5.0);
    const Tensor z = embed_sequence(w_e, pe, x);
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t j = 0; j < 6; ++j) {
          CHECK(z[(b * 3 + p) * 6 + j] == pe(p, j));
        }
      }
    }
  }

  SUBCASE("shape contract") {
    const Tensor w_e = Tensor::matrix(4, 32);
    const Tensor pe = positional_encoding(12, 32);
    const Tensor x({3, 12, 4});
    CHECK(embed_sequence(w_e, pe, x).shape() == std::vector<std::size_t>{3, 12, 32});
    const Tensor short_pe = positional_encoding(5, 32);
    CHECK_THROWS_AS(embed_sequence(w_e, short_pe, x), DimensionError);
    const Tensor bad_we = Tensor::matrix(3, 32);
    CHECK_THROWS_AS(embed_sequence(bad_we, pe, x), DimensionError);
  }
}

TEST_CASE("attention oracles") {
  SUBCASE("single key returns V exactly") {
    const Tensor q = mat({{0.3, -1.0}});
    const Tensor k = mat({{2.0, 0.5}});
    const Tensor v = mat({{7.0, -3.0}});
    const Tensor out = attention(q, k, v);
    CHECK(out(0, 0) == 7.0);
    CHECK(out(0, 1) == -3.0);
  }

  SUBCASE("equal keys average V within 1e-12") {
    const Tensor q = mat({{1.0, 2.0}, {0.0, -1.0}});
    const Tensor k = mat({{0.5, 0.5}, {0.5, 0.5}});
    const Tensor v = mat({{1.0, 3.0}, {5.0, 9.0}});
    const Tensor out = attention(q, k, v);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(out(i, 0) == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(out(i, 1) == doctest::Approx(6.0).epsilon(1e-12));
    }
  }

  SUBCASE("two-key closed form") {
    // d_k=1, q=1, keys {1,0}: scores {1,0}, weights {e/(e+1), 1/(e+1)}.
    const Tensor q = mat({{1.0}});
    const Tensor k = mat({{1.0}, {0.0}});
    const Tensor v = mat({{1.0}, {0.0}});
    const double w0 = std::exp(1.0) / (std::exp(1.0) + 1.0);
    const Tensor out = attention(q, k, v);
    CHECK(out(0, 0) == doctest::Approx(w0).epsilon(1e-12));
    CHECK(out(0, 0) == doctest::Approx(0.73105857863).epsilon(1e-9));
  }

  SUBCASE("permuting keys and values together leaves the output unchanged") {
    Rng rng(31, 0);
    Tensor q = Tensor::matrix(3, 4);
    Tensor k = Tensor::matrix(5, 4);
    Tensor v = Tensor::matrix(5, 4);
    for (auto& x : q.values()) x = rng.normal();
    for (auto& x : k.values()) x = rng.normal();
    for (auto& x : v.values()) x = rng.normal();

    Tensor kp = k, vp = v;
    const std::size_t perm[5] = {3, 0, 4, 1, 2};
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        kp(i, j) = k(perm[i], j);
        vp(i, j) = v(perm[i], j);
      }
    }
    CHECK(testutil::max_abs_diff(attention(q, k, v), attention(q, kp, vp)) <= 1e-12);
  }
}

TEST_CASE("layer norm normalizes and differentiates") {
  Rng rng(8, 0);
  Tensor x = Tensor::matrix(6, 10);
  for (auto& v : x.values()) v = rng.normal() * 3.0 + 2.0;

  LayerNorm ln;
  LayerNorm::Cache cache;
  const Tensor y = ln.forward(x, cache);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < y.cols(); ++j) mean += y(i, j);
    mean /= static_cast<double>(y.cols());
    for (std::size_t j = 0; j < y.cols(); ++j) {
      var += (y(i, j) - mean) * (y(i, j) - mean);
    }
    var /= static_cast<double>(y.cols());
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("backward matches central differences") {
    Tensor dy = Tensor::matrix(6, 10);
    Rng g(9, 0);
    for (auto& v : dy.values()) v = g.normal();
    LayerNorm::Cache c2;
    ln.forward(x, c2);
    const Tensor dx = ln.backward(dy, c2);

    double max_rel = 0.0;
    Rng pick(10, 0);
    for (int probe = 0; probe < 40; ++probe) {
      const std::size_t idx = pick.below(x.size());
      const double eps = 1e-6;
      const double orig = x[idx];
      auto dot_loss = [&](double val) {
        x[idx] = val;
        LayerNorm::Cache tmp;
        const Tensor yy = ln.forward(x, tmp);
        double s = 0.0;
        for (std::size_t i = 0; i < yy.size(); ++i) s += yy[i] * dy[i];
        return s;
      };
      const double num = (dot_loss(orig + eps) - dot_loss(orig - eps)) / (2 * eps);
      x[idx] = orig;
      const double rel =
          std::abs(dx[idx] - num) / std::max({std::abs(dx[idx]), std::abs(num), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-5);
  }
}

namespace {

TransformerConfig tiny_config() {
  TransformerConfig cfg;
  cfg.series_dim = 4;
  cfg.seq_len = 5;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_blocks = 2;
  cfg.d_ff = 12;
  return cfg;
}

Tensor random_series(std::size_t batch, std::size_t seq, std::size_t dim,
                     std::uint64_t seed) {
  Tensor x({batch, seq, dim});
  Rng rng(seed, 0);
  for (auto& v : x.values()) v = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("temporal encoder output shape and determinism") {
  const TransformerConfig cfg = tiny_config();
  Rng rng(21, 0);
  TemporalEncoder enc(cfg, rng);

  const Tensor x = random_series(4, cfg.seq_len, cfg.series_dim, 77);
  const Tensor mask = Tensor::matrix(4, cfg.seq_len, 1.0);
  const Tensor h1 = enc.infer(x, mask);
  const Tensor h2 = enc.infer(x, mask);
  CHECK(h1.rows() == 4);
  CHECK(h1.cols() == cfg.d_model);
  CHECK(testutil::max_abs_diff(h1, h2) == 0.0);

  // Duplicated batch rows map to identical encodings.
  Tensor xx({2, cfg.seq_len, cfg.series_dim});
  for (std::size_t i = 0; i < cfg.seq_len * cfg.series_dim; ++i) {
    xx[i] = x[i];
    xx[cfg.seq_len * cfg.series_dim + i] = x[i];
  }
  const Tensor hh = enc.infer(xx, Tensor::matrix(2, cfg.seq_len, 1.0));
  for (std::size_t j = 0; j < cfg.d_model; ++j) {
    CHECK(hh(0, j) == hh(1, j));
  }
}

TEST_CASE("mask gates pooling but never attention") {
  // With no blocks and a constant positional table, every position carries
  // the same embedding, so any mask must pool to the same vector.
  TransformerConfig cfg = tiny_config();
  cfg.n_blocks = 0;
  Rng rng(22, 0);
  TemporalEncoder enc(cfg, rng);
  enc.pe = Tensor::matrix(cfg.seq_len, cfg.d_model, 0.25);

  Tensor x({1, cfg.seq_len, cfg.series_dim});
  for (std::size_t p = 0; p < cfg.seq_len; ++p) {
    for (std::size_t j = 0; j < cfg.series_dim; ++j) {
      x[p * cfg.series_dim + j] = 0.1 * static_cast<double>(j + 1);
    }
  }
  Tensor full = Tensor::matrix(1, cfg.seq_len, 1.0);
  Tensor partial = Tensor::matrix(1, cfg.seq_len, 0.0);
  partial(0, cfg.seq_len - 1) = 1.0;
  partial(0, cfg.seq_len - 2) = 1.0;

  const Tensor hf = enc.infer(x, full);
  const Tensor hp = enc.infer(x, partial);
  CHECK(testutil::max_abs_diff(hf, hp) <= 1e-9);

  SUBCASE("padded positions do influence attention") {
    // Restore blocks: zeroing out early positions changes what the valid
    // tail attends to, so the pooled vector moves even though the mask
    // selects the same tail.
    TransformerConfig cfg2 = tiny_config();
    Rng rng2(23, 0);
    TemporalEncoder enc2(cfg2, rng2);
    const Tensor xr = random_series(1, cfg2.seq_len, cfg2.series_dim, 91);
    Tensor xz = xr;
    for (std::size_t j = 0; j < 2 * cfg2.series_dim; ++j) xz[j] = 0.0;

    Tensor tail_mask = Tensor::matrix(1, cfg2.seq_len, 1.0);
    tail_mask(0, 0) = 0.0;
    tail_mask(0, 1) = 0.0;
    const Tensor ha = enc2.infer(xr, tail_mask);
    const Tensor hb = enc2.infer(xz, tail_mask);
    CHECK(testutil::max_abs_diff(ha, hb) > 1e-9);
  }

  SUBCASE("all-zero mask is rejected") {
    CHECK_THROWS_AS(enc.infer(x, Tensor::matrix(1, cfg.seq_len, 0.0)),
                    InvalidInputError);
  }
}

TEST_CASE("single-position sequence pools to that position") {
  TransformerConfig cfg = tiny_config();
  cfg.seq_len = 1;
  cfg.n_blocks = 1;
  Rng rng(24, 0);
  TemporalEncoder enc(cfg, rng);
  const Tensor x = random_series(2, 1, cfg.series_dim, 55);
  const Tensor h = enc.infer(x, Tensor::matrix(2, 1, 1.0));
  CHECK(h.rows() == 2);
  CHECK(h.cols() == cfg.d_model);
  CHECK(h.all_finite());
}

TEST_CASE("temporal encoder gradients pass a central-difference check") {
  const TransformerConfig cfg = tiny_config();
  Rng rng(25, 0);
  TemporalEncoder enc(cfg, rng);

  const Tensor x = random_series(3, cfg.seq_len, cfg.series_dim, 66);
  Tensor mask = Tensor::matrix(3, cfg.seq_len, 1.0);
  mask(1, 0) = 0.0;  // one padded position to exercise the pooling scatter
  Tensor dh = Tensor::matrix(3, cfg.d_model);
  Rng g(26, 0);
  for (auto& v : dh.values()) v = g.normal();

  auto loss = [&](bool with_grad) {
    if (!with_grad) {
      const Tensor h = enc.infer(x, mask);
      double s = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * dh[i];
      return s;
    }
    TemporalEncoder::Cache cache;
    const Tensor h = enc.forward(x, mask, cache);
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * dh[i];
    enc.backward(dh, cache);
    return s;
  };

  const GradCheckResult res = grad_check(loss, enc.parameters(), 1e-5, 19, 80);
  INFO("worst " << res.worst_param << "[" << res.worst_index << "]");
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("transformer config validation") {
  TransformerConfig cfg = tiny_config();
  cfg.n_heads = 3;  // does not divide d_model=8
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.d_model = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.d_k() == 4);
}
