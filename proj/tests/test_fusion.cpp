#include <cmath>

#include <doctest.h>

#include "taxrisk/errors.hpp"
#include "taxrisk/fusion.hpp"
#include "taxrisk/gradcheck.hpp"
#include "taxrisk/hybrid_model.hpp"
#include "taxrisk/metrics.hpp"
#include "taxrisk/ops.hpp"
#include "test_util.hpp"

using namespace taxrisk;
using testutil::mat;

TEST_CASE("fuse keeps column order h_s, h_t, z") {
  const Tensor hs = mat({{1, 2}});
  const Tensor ht = mat({{3, 4, 5}});
  const Tensor z = mat({{6}});
  const Tensor fused = fuse(hs, ht, z);
  CHECK(fused.cols() == 6);
  for (std::size_t j = 0; j < 6; ++j) CHECK(fused(0, j) == static_cast<double>(j + 1));
  CHECK(testutil::max_abs_diff(slice_cols(fused, 2, 3), ht) == 0.0);
  CHECK_THROWS_AS(fuse(hs, mat({{1}, {2}}), z), DimensionError);
}

TEST_CASE("assign_level oracles") {
  LevelPolicy argmax;

  CHECK(assign_level({0.2, 0.3, 0.5}, argmax) == RiskLevel::High);
  CHECK(assign_level({0.7, 0.2, 0.1}, argmax) == RiskLevel::Low);
  // Ties break toward the riskier level.
  CHECK(assign_level({0.5, 0.5, 0.0}, argmax) == RiskLevel::Medium);
  CHECK(assign_level({0.4, 0.2, 0.4}, argmax) == RiskLevel::High);
  const double third = 1.0 / 3.0;
  CHECK(assign_level({third, third, third}, argmax) == RiskLevel::High);

  LevelPolicy threshold;
  threshold.mode = LevelPolicy::Mode::Threshold;
  threshold.high_threshold = 0.3;
  CHECK(assign_level({0.4, 0.25, 0.35}, threshold) == RiskLevel::High);
  CHECK(assign_level({0.4, 0.35, 0.25}, threshold) == RiskLevel::Low);
  CHECK(assign_level({0.3, 0.45, 0.25}, threshold) == RiskLevel::Medium);

  SUBCASE("rows must be normalized and finite") {
    CHECK_THROWS_AS(assign_level({0.5, 0.5, 0.5}, argmax), InvalidDistributionError);
    CHECK_THROWS_AS(assign_level({0.5, std::nan(""), 0.2}, argmax),
                    InvalidDistributionError);
    CHECK_THROWS_AS(assign_level(std::vector<double>{0.5, 0.5}, argmax),
                    DimensionError);
  }

  SUBCASE("threshold mode requires the cutoff") {
    LevelPolicy bare;
    bare.mode = LevelPolicy::Mode::Threshold;
    CHECK_THROWS_AS(bare.validate(), ConfigError);
    bare.high_threshold = 1.5;
    CHECK_THROWS_AS(bare.validate(), ConfigError);
  }

  SUBCASE("argmax decision is invariant to softmax of scaled logits") {
    // Softmax preserves ordering, so classify(logits) and classify(2*logits
    // + shift) agree whenever the argmax is unique.
    Rng rng(50, 0);
    LevelPolicy policy;
    for (int trial = 0; trial < 200; ++trial) {
      Tensor logits = Tensor::matrix(1, 3);
      for (auto& v : logits.values()) v = rng.normal() * 2.0;
      const Tensor p1 = softmax_rows(logits);
      Tensor scaled = logits;
      for (auto& v : scaled.values()) v = 2.0 * v + 0.7;
      const Tensor p2 = softmax_rows(scaled);
      CHECK(assign_level(p1.data(), policy) == assign_level(p2.data(), policy));
    }
  }
}

TEST_CASE("total loss composes cross entropy and the masked AE penalty") {
  const Tensor probs = mat({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
  const std::vector<int> labels{0, 1};
  Tensor errors({2});
  errors[0] = 2.0;
  errors[1] = 10.0;

  SUBCASE("perfect predictions with lambda 0 cost nothing") {
    CHECK(total_loss(probs, labels, errors, {false, false}, 0.1) ==
          doctest::Approx(0.0).epsilon(1e-9));
    CHECK(total_loss(probs, labels, errors, {true, true}, 0.0) ==
          doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("hand-computed joint value") {
    // CE = 1 from -ln(e^-1); AE mean over the single masked row = 2.
    Tensor p = mat({{std::exp(-1.0), 1.0 - std::exp(-1.0), 0.0}});
    Tensor one_err({1});
    one_err[0] = 2.0;
    const double loss = total_loss(p, {0}, one_err, {true}, 0.5);
    CHECK(loss == doctest::Approx(1.0 + 0.5 * 2.0).epsilon(1e-12));
  }

  SUBCASE("empty mask drops the AE term") {
    const Tensor p = mat({{0.5, 0.25, 0.25}, {0.25, 0.5, 0.25}});
    const double ce = cross_entropy(p, labels);
    CHECK(total_loss(p, labels, errors, {false, false}, 7.0) ==
          doctest::Approx(ce).epsilon(1e-12));
    CHECK(masked_ae_mean(errors, {false, false}) == 0.0);
    CHECK(masked_ae_mean(errors, {true, true}) == doctest::Approx(6.0));
  }

  CHECK_THROWS_AS(total_loss(probs, labels, errors, {true}, 0.1), DimensionError);
  CHECK_THROWS_AS(total_loss(probs, labels, errors, {true, true}, -0.5), ConfigError);
}

namespace {

ModelConfig tiny_model_config(std::size_t static_dim) {
  ModelConfig cfg;
  cfg.static_dim = static_dim;
  cfg.static_hidden = {10, 6};
  cfg.transformer.series_dim = 4;
  cfg.transformer.seq_len = 5;
  cfg.transformer.d_model = 8;
  cfg.transformer.n_heads = 2;
  cfg.transformer.n_blocks = 1;
  cfg.transformer.d_ff = 12;
  cfg.ae_latent = 5;
  return cfg;
}

struct TinyBatch {
  Tensor x_static;
  Tensor x_series;
  Tensor mask;
  std::vector<int> labels;
  std::vector<bool> normal;
};

TinyBatch make_batch(const ModelConfig& cfg, std::size_t n, std::uint64_t seed) {
  TinyBatch b;
  Rng rng(seed, 0);
  b.x_static = Tensor::matrix(n, cfg.static_dim);
  for (auto& v : b.x_static.values()) v = rng.normal();
  b.x_series = Tensor({n, cfg.transformer.seq_len, cfg.transformer.series_dim});
  for (auto& v : b.x_series.values()) v = rng.normal();
  b.mask = Tensor::matrix(n, cfg.transformer.seq_len, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(static_cast<int>(rng.below(3)));
    b.normal.push_back(b.labels.back() == 0);
  }
  if (n > 1) b.mask(0, 0) = 0.0;
  return b;
}

}  // namespace

TEST_CASE("hybrid forward produces normalized probabilities and finite errors") {
  const ModelConfig cfg = tiny_model_config(7);
  Rng rng(60, 0);
  HybridModel model(cfg, rng);
  const TinyBatch b = make_batch(cfg, 6, 61);

  const HybridModel::Output out = model.infer(b.x_static, b.x_series, b.mask);
  CHECK(out.probs.rows() == 6);
  CHECK(out.probs.cols() == 3);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      s += out.probs(i, j);
      CHECK(out.probs(i, j) >= 0.0);
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
    CHECK(out.recon_errors[i] >= 0.0);
    CHECK(std::isfinite(out.recon_errors[i]));
  }
}

TEST_CASE("hybrid joint gradient passes a central-difference check") {
  const ModelConfig cfg = tiny_model_config(7);
  Rng rng(62, 0);
  HybridModel model(cfg, rng);
  const TinyBatch b = make_batch(cfg, 4, 63);
  const double lambda = 0.1;

  auto loss = [&](bool with_grad) {
    if (!with_grad) {
      const auto out = model.infer(b.x_static, b.x_series, b.mask);
      return total_loss(out.probs, b.labels, out.recon_errors, b.normal, lambda);
    }
    HybridModel::Cache cache;
    model.forward(b.x_static, b.x_series, b.mask, cache);
    return model.backward(cache, b.labels, b.normal, lambda);
  };

  const GradCheckResult res = grad_check(loss, model.parameters(), 1e-5, 64, 120);
  INFO("worst " << res.worst_param << "[" << res.worst_index << "]");
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("metrics oracles") {
  SUBCASE("hand example reaches macro f1 of 7/9") {
    // true L,L,M,H vs pred L,M,M,H: per-class F1 2/3, 2/3, 1.
    const std::vector<int> truth{0, 0, 1, 2};
    const std::vector<int> pred{0, 1, 1, 2};
    const MetricsReport m = compute_metrics(truth, pred);
    CHECK(m.macro_f1 == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.per_class[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.per_class[1].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.per_class[2].f1 == doctest::Approx(1.0));
    CHECK(m.evaluated == 4);
  }

  SUBCASE("absent predicted class contributes zero F1") {
    Confusion c{};
    c[0][0] = 5;
    c[1][1] = 5;
    c[2][0] = 3;  // every true High predicted Low, no High predictions at all
    const MetricsReport m = metrics_from_confusion(c);
    CHECK(m.per_class[2].f1 == 0.0);
    CHECK(m.per_class[0].f1 == doctest::Approx(10.0 / 13.0).epsilon(1e-12));
    const double expect = (10.0 / 13.0 + 1.0 + 0.0) / 3.0;
    CHECK(m.macro_f1 == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("perfect and perfectly wrong") {
    Confusion diag{};
    diag[0][0] = diag[1][1] = diag[2][2] = 4;
    CHECK(metrics_from_confusion(diag).macro_f1 == doctest::Approx(1.0));
    CHECK(metrics_from_confusion(diag).accuracy == doctest::Approx(1.0));

    Confusion wrong{};
    wrong[0][1] = wrong[1][2] = wrong[2][0] = 4;
    CHECK(metrics_from_confusion(wrong).macro_f1 == doctest::Approx(0.0));
    CHECK(metrics_from_confusion(wrong).accuracy == doctest::Approx(0.0));
  }

  SUBCASE("agrees with a brute-force recount on random label pairs") {
    Rng rng(70, 0);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 3 + rng.below(60);
      std::vector<int> truth(n), pred(n);
      for (std::size_t i = 0; i < n; ++i) {
        truth[i] = static_cast<int>(rng.below(3));
        pred[i] = static_cast<int>(rng.below(3));
      }
      const MetricsReport m = compute_metrics(truth, pred);

      double f1_sum = 0.0;
      std::size_t correct = 0;
      for (int c = 0; c < 3; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (truth[i] == c && pred[i] == c) ++tp;
          if (truth[i] != c && pred[i] == c) ++fp;
          if (truth[i] == c && pred[i] != c) ++fn;
        }
        const double prec = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
        const double rec = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
        const double f1 = prec + rec == 0.0 ? 0.0 : 2 * prec * rec / (prec + rec);
        f1_sum += f1;
      }
      for (std::size_t i = 0; i < n; ++i) correct += truth[i] == pred[i];
      CHECK(std::abs(m.macro_f1 - f1_sum / 3.0) <= 1e-12);
      CHECK(std::abs(m.accuracy - double(correct) / double(n)) <= 1e-12);
    }
  }

  SUBCASE("consistent relabeling permutes per-class rows") {
    const std::vector<int> truth{0, 0, 1, 2, 2, 2, 1};
    const std::vector<int> pred{0, 1, 1, 2, 0, 2, 1};
    const MetricsReport base = compute_metrics(truth, pred);
    // Swap classes 0 and 2 in both vectors: macro scores must not move.
    auto swap02 = [](std::vector<int> xs) {
      for (int& x : xs) x = x == 0 ? 2 : (x == 2 ? 0 : x);
      return xs;
    };
    const MetricsReport swapped = compute_metrics(swap02(truth), swap02(pred));
    CHECK(base.macro_f1 == doctest::Approx(swapped.macro_f1).epsilon(1e-12));
    CHECK(base.macro_recall == doctest::Approx(swapped.macro_recall).epsilon(1e-12));
    CHECK(base.per_class[0].f1 == doctest::Approx(swapped.per_class[2].f1));
  }

  SUBCASE("degenerate inputs") {
    Confusion empty{};
    CHECK_THROWS_AS(metrics_from_confusion(empty), EvaluationError);
    CHECK_THROWS_AS(compute_metrics({0, 1}, {0}), EvaluationError);
    CHECK_THROWS_AS(compute_metrics({0, 3}, {0, 0}), InvalidLabelError);
  }
}

TEST_CASE("risk level names round trip") {
  CHECK(to_string(RiskLevel::Low) == "low");
  CHECK(to_string(RiskLevel::Medium) == "medium");
  CHECK(to_string(RiskLevel::High) == "high");
  CHECK(risk_level_from_string("medium") == RiskLevel::Medium);
  CHECK_THROWS_AS(risk_level_from_string("extreme"), ValidationError);
}
