#include "taxrisk/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "taxrisk/errors.hpp"
#include "taxrisk/rng.hpp"

namespace taxrisk {

void SyntheticConfig::validate() const {
  if (seq_len < 2) throw ConfigError("synthetic.seq_len must be at least 2");
  double mix = 0.0;
  for (double m : industry_mix) {
    if (m < 0.0) throw ConfigError("industry mix entries must be nonnegative");
    mix += m;
  }
  if (std::abs(mix - 1.0) > 1e-9) throw ConfigError("industry mix must sum to 1");
  if (low_share < 0.0 || medium_share < 0.0 || high_share < 0.0 ||
      std::abs(low_share + medium_share + high_share - 1.0) > 1e-9) {
    throw ConfigError("regime mix must be nonnegative and sum to 1");
  }
  if (label_noise < 0.0 || label_noise >= 1.0) {
    throw ConfigError("label_noise must lie in [0,1)");
  }
  if (missing_rate < 0.0 || missing_rate >= 1.0) {
    throw ConfigError("missing_rate must lie in [0,1)");
  }
}

namespace {
// Per-industry character, indexed like kIndustries.
constexpr double kRevenueBase[5] = {5000.0, 3000.0, 4000.0, 4500.0, 6000.0};
constexpr double kMarginBase[5] = {0.10, 0.06, 0.18, 0.08, 0.04};
constexpr double kTicketBase[5] = {25.0, 1.2, 8.0, 60.0, 15.0};
constexpr double kSizeBase[5] = {120.0, 40.0, 35.0, 80.0, 25.0};
constexpr double kCapitalBase[5] = {2000.0, 500.0, 800.0, 1500.0, 600.0};
constexpr double kSeasonal[5][4] = {
    {0.97, 1.03, 1.00, 1.00},  // manufacturing
    {0.95, 0.97, 1.00, 1.08},  // retail
    {0.99, 1.00, 1.01, 1.00},  // internet_services
    {0.90, 1.05, 1.07, 0.98},  // construction
    {0.97, 1.00, 1.03, 1.00},  // wholesale
};

// Weak, overlapping link between regime and the static compliance score so
// the score alone cannot separate the classes.
constexpr double kComplianceMean[3] = {0.72, 0.63, 0.54};
constexpr double kComplianceStd[3] = {0.13, 0.15, 0.16};

std::size_t pick_weighted(double u, const double* weights, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return n - 1;
}

std::vector<std::size_t> pick_quarters(Rng& rng, std::size_t seq_len, std::size_t count) {
  std::vector<std::size_t> all(seq_len);
  for (std::size_t i = 0; i < seq_len; ++i) all[i] = i;
  rng.shuffle(all);
  all.resize(count);
  return all;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }
}  // namespace

std::vector<EnterpriseRecord> generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::vector<EnterpriseRecord> records;
  records.reserve(cfg.n_enterprises);

  for (std::size_t firm = 0; firm < cfg.n_enterprises; ++firm) {
    Rng rng(cfg.seed, firm);
    EnterpriseRecord rec;
    char id[16];
    std::snprintf(id, sizeof(id), "E%06zu", firm);
    rec.id = id;

    const std::size_t industry = pick_weighted(rng.uniform01(), cfg.industry_mix.data(), 5);
    rec.industry = kIndustries[industry];
    rec.region = kRegions[rng.below(kRegions.size())];

    const double regime_mix[3] = {cfg.low_share, cfg.medium_share, cfg.high_share};
    const std::size_t regime = pick_weighted(rng.uniform01(), regime_mix, 3);

    // Most firms report up to the current quarter; a minority lag behind.
    constexpr double quarter_weights[4] = {0.12, 0.12, 0.12, 0.64};
    rec.final_quarter = 48 + static_cast<long long>(
        pick_weighted(rng.uniform01(), quarter_weights, 4));

    rec.company_size = std::max(3.0, std::round(std::exp(
        rng.normal(std::log(kSizeBase[industry]), 0.5))));
    rec.registered_capital = std::exp(rng.normal(std::log(kCapitalBase[industry]), 0.5));
    rec.compliance_score = clamp01(rng.normal(kComplianceMean[regime], kComplianceStd[regime]));

    // Nuisance spreads are deliberately moderate: wide enough that no class
    // is separable from raw levels, narrow enough that the planted
    // within-firm distortions survive global normalization.
    const double rev0 = kRevenueBase[industry] * std::exp(rng.normal(0.0, 0.20));
    const double margin = std::min(0.35, std::max(0.03, rng.normal(kMarginBase[industry], 0.04)));
    const double tax_rate = rng.uniform(0.15, 0.25);
    const double ticket = kTicketBase[industry] * std::exp(rng.normal(0.0, 0.25));

    constexpr double rho = 0.7;
    constexpr double sigma_g = 0.07;
    double g = rng.normal(0.0, sigma_g / std::sqrt(1.0 - rho * rho));

    std::vector<double> revenue(cfg.seq_len), profit(cfg.seq_len);
    std::vector<double> tax(cfg.seq_len), invoices(cfg.seq_len);
    for (std::size_t t = 0; t < cfg.seq_len; ++t) {
      if (t > 0) g = rho * g + rng.normal(0.0, sigma_g);
      const long long cal = rec.final_quarter - static_cast<long long>(cfg.seq_len) + 1 +
                            static_cast<long long>(t);
      const double season = kSeasonal[industry][((cal % 4) + 4) % 4];
      revenue[t] = rev0 * season * std::exp(g);
      // Proportional noise keeps low-margin industries from drowning their
      // own tax series in bookkeeping jitter.
      profit[t] = revenue[t] * margin * (1.0 + rng.normal(0.0, 0.07));
      tax[t] = tax_rate * std::max(profit[t], 0.0) * std::exp(rng.normal(0.0, 0.008));
      invoices[t] = std::max(1.0, std::round(revenue[t] / ticket *
                                             std::exp(rng.normal(0.0, 0.12))));
    }

    if (regime == 2) {
      // High risk: strong tax deflation on 4-7 quarters plus invoice
      // spikes on 2-3 quarters, both decoupled from the revenue path.
      const std::size_t n_deflate = 4 + rng.below(4);
      const double factor = rng.uniform(0.4, 0.7);
      for (std::size_t t : pick_quarters(rng, cfg.seq_len, n_deflate)) tax[t] *= factor;
      const std::size_t n_spikes = 2 + rng.below(2);
      for (std::size_t t : pick_quarters(rng, cfg.seq_len, n_spikes)) {
        invoices[t] = std::max(1.0, std::round(invoices[t] * rng.uniform(1.8, 3.0)));
      }
    } else if (regime == 1) {
      const std::size_t n_deflate = 2 + rng.below(2);
      const double factor = rng.uniform(0.75, 0.9);
      for (std::size_t t : pick_quarters(rng, cfg.seq_len, n_deflate)) tax[t] *= factor;
    }

    std::size_t label = regime;
    if (cfg.label_noise > 0.0 && rng.uniform01() < cfg.label_noise) {
      const std::size_t other = rng.below(2);
      label = (label + 1 + other) % 3;
    }
    // Regimes are ordered low, medium, high to match the level codes.
    rec.label = static_cast<RiskLevel>(static_cast<int>(label));

    const std::vector<double>* values[4] = {&revenue, &profit, &tax, &invoices};
    for (std::size_t c = 0; c < 4; ++c) {
      Channel ch(cfg.seq_len);
      std::size_t present = 0;
      for (std::size_t t = 0; t < cfg.seq_len; ++t) {
        if (cfg.missing_rate > 0.0 && rng.uniform01() < cfg.missing_rate) {
          ch[t] = std::nullopt;
        } else {
          ch[t] = (*values[c])[t];
          ++present;
        }
      }
      if (present < 2) {
        for (std::size_t t = 0; t < cfg.seq_len; ++t) ch[t] = (*values[c])[t];
      }
      rec.channel(c) = std::move(ch);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace taxrisk
