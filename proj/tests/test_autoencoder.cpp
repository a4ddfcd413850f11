#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "taxrisk/adam.hpp"
#include "taxrisk/autoencoder.hpp"
#include "taxrisk/errors.hpp"
#include "taxrisk/gradcheck.hpp"
#include "taxrisk/ops.hpp"
#include "test_util.hpp"

using namespace taxrisk;
using testutil::mat;

namespace {

AeConfig small_cfg(std::size_t in, std::size_t latent) {
  AeConfig cfg;
  cfg.input_dim = in;
  cfg.latent_dim = latent;
  return cfg;
}

}  // namespace

TEST_CASE("autoencoder shape contract and zero weights") {
  Rng rng(40, 0);
  Autoencoder ae(small_cfg(6, 3), rng);
  Tensor z = Tensor::matrix(4, 6, 0.5);
  const Autoencoder::Output out = ae.infer(z);
  CHECK(out.latent.rows() == 4);
  CHECK(out.latent.cols() == 3);
  CHECK(out.recon.rows() == 4);
  CHECK(out.recon.cols() == 6);

  for (auto& v : ae.encoder.w.value.values()) v = 0.0;
  for (auto& v : ae.encoder.b.value.values()) v = 0.0;
  for (auto& v : ae.decoder.w.value.values()) v = 0.0;
  for (auto& v : ae.decoder.b.value.values()) v = 0.0;
  const Autoencoder::Output zeroed = ae.infer(z);
  for (std::size_t i = 0; i < zeroed.recon.size(); ++i) CHECK(zeroed.recon[i] == 0.0);

  CHECK_THROWS_AS(ae.infer(Tensor::matrix(1, 5)), DimensionError);
  CHECK_THROWS_AS(small_cfg(4, 0).validate(), ConfigError);
  CHECK_THROWS_AS(small_cfg(4, 8).validate(), ConfigError);
}

TEST_CASE("reconstruction errors are squared distances") {
  const Tensor z = mat({{1, 2}, {0, 0}, {3, 3}});
  const Tensor recon = mat({{1, 2}, {3, 4}, {3, 2}});
  const Tensor err = reconstruction_errors(z, recon);
  CHECK(err.size() == 3);
  CHECK(err[0] == 0.0);          // exact reconstruction, exactly zero
  CHECK(err[1] == 25.0);         // 9 + 16
  CHECK(err[2] == 1.0);
  for (std::size_t i = 0; i < err.size(); ++i) CHECK(err[i] >= 0.0);
  CHECK_THROWS_AS(reconstruction_errors(z, mat({{1, 2}})), DimensionError);
}

TEST_CASE("reconstruction loss gradient passes a central-difference check") {
  Rng rng(41, 0);
  Autoencoder ae(small_cfg(5, 2), rng);
  Tensor z = Tensor::matrix(3, 5);
  for (auto& v : z.values()) v = rng.normal();

  // loss = mean squared reconstruction error over the batch
  auto loss = [&](bool with_grad) {
    const double inv_n = 1.0 / static_cast<double>(z.rows());
    if (!with_grad) {
      const auto out = ae.infer(z);
      const Tensor err = reconstruction_errors(z, out.recon);
      double s = 0.0;
      for (std::size_t i = 0; i < err.size(); ++i) s += err[i];
      return s * inv_n;
    }
    Autoencoder::Cache cache;
    const auto out = ae.forward(z, cache);
    const Tensor err = reconstruction_errors(z, out.recon);
    double s = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) s += err[i];
    Tensor drecon(out.recon.shape());
    for (std::size_t i = 0; i < drecon.size(); ++i) {
      drecon[i] = 2.0 * (out.recon[i] - z[i]) * inv_n;
    }
    Tensor dlatent(out.latent.shape());
    ae.backward(dlatent, drecon, cache);
    return s * inv_n;
  };

  const GradCheckResult res = grad_check(loss, ae.parameters(), 1e-5, 42);
  INFO("worst " << res.worst_param << "[" << res.worst_index << "]");
  CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("autoencoder learns a rank-limited subspace") {
  // Data lies on a 2D plane in 6D; a 2-unit latent can reconstruct it.
  Rng rng(43, 0);
  const std::size_t n = 64;
  Tensor basis = Tensor::matrix(2, 6);
  for (auto& v : basis.values()) v = rng.normal();
  Tensor z = Tensor::matrix(n, 6);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal(), b = rng.normal();
    for (std::size_t j = 0; j < 6; ++j) {
      z(i, j) = a * basis(0, j) + b * basis(1, j);
    }
  }

  Autoencoder ae(small_cfg(6, 4), rng);
  AdamState opt(ae.parameters(), AdamConfig{.lr = 5e-3});
  double final_loss = 1e300;
  for (int step = 0; step < 2000; ++step) {
    Autoencoder::Cache cache;
    const auto out = ae.forward(z, cache);
    const Tensor err = reconstruction_errors(z, out.recon);
    double s = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) s += err[i];
    final_loss = s / static_cast<double>(n);
    Tensor drecon(out.recon.shape());
    for (std::size_t i = 0; i < drecon.size(); ++i) {
      drecon[i] = 2.0 * (out.recon[i] - z[i]) / static_cast<double>(n);
    }
    Tensor dlatent(out.latent.shape());
    ae.backward(dlatent, drecon, cache);
    opt.step();
  }
  CHECK(final_loss < 1e-3);
}

TEST_CASE("quantile threshold matches a sort-based oracle") {
  SUBCASE("constant sample") {
    std::vector<double> tens(10, 2.0);
    CHECK(calibrate_threshold(tens, 0.95).tau == 2.0);
  }

  SUBCASE("interpolation on 1..10") {
    std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(calibrate_threshold(xs, 0.5).tau == doctest::Approx(5.5).epsilon(1e-12));
    CHECK(calibrate_threshold(xs, 0.9).tau == doctest::Approx(9.1).epsilon(1e-12));
    const AnomalyThreshold th = calibrate_threshold(xs, 0.95);
    CHECK(th.calibration_quantile == 0.95);
    CHECK(th.calibration_count == 10);
  }

  SUBCASE("order invariance and monotonicity in q") {
    Rng rng(44, 0);
    std::vector<double> xs(37);
    for (auto& v : xs) v = std::abs(rng.normal()) * 10.0;
    std::vector<double> shuffled = xs;
    Rng(45, 0).shuffle(shuffled);
    CHECK(calibrate_threshold(xs, 0.8).tau ==
          doctest::Approx(calibrate_threshold(shuffled, 0.8).tau).epsilon(1e-12));
    double prev = -1.0;
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
      const double tau = calibrate_threshold(xs, q).tau;
      CHECK(tau >= prev);
      prev = tau;
    }
  }

  SUBCASE("agreement with the h = (n-1)q formula on random data") {
    Rng rng(46, 0);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 10 + rng.below(90);
      std::vector<double> xs(n);
      for (auto& v : xs) v = std::abs(rng.normal());
      const double q = 0.05 + 0.9 * rng.uniform01();

      std::vector<double> sorted = xs;
      std::sort(sorted.begin(), sorted.end());
      const double h = static_cast<double>(n - 1) * q;
      const std::size_t lo = static_cast<std::size_t>(std::floor(h));
      const std::size_t hi = std::min(lo + 1, n - 1);
      const double expect = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
      CHECK(calibrate_threshold(xs, q).tau == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  SUBCASE("rejects undersized or invalid samples") {
    std::vector<double> nine(9, 1.0);
    CHECK_THROWS_AS(calibrate_threshold(nine, 0.95), CalibrationError);
    std::vector<double> ok(10, 1.0);
    CHECK_THROWS_AS(calibrate_threshold(ok, 0.0), CalibrationError);
    CHECK_THROWS_AS(calibrate_threshold(ok, 1.0), CalibrationError);
    std::vector<double> neg(10, 1.0);
    neg[3] = -0.5;
    CHECK_THROWS_AS(calibrate_threshold(neg, 0.5), CalibrationError);
  }
}

TEST_CASE("anomaly flag is a strict exceedance test") {
  AnomalyThreshold th;
  th.tau = 1.0;
  CHECK_FALSE(flag_anomaly(0.5, th));
  CHECK_FALSE(flag_anomaly(1.0, th));  // exactly tau is not anomalous
  CHECK(flag_anomaly(1.0 + 1e-9, th));
  CHECK_THROWS_AS(flag_anomaly(-1.0, th), InvalidInputError);
  CHECK_THROWS_AS(flag_anomaly(std::nan(""), th), InvalidInputError);
}
