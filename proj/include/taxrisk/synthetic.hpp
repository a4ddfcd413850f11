#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "taxrisk/record.hpp"

namespace taxrisk {

inline constexpr std::array<const char*, 5> kIndustries = {
    "manufacturing", "retail", "internet_services", "construction", "wholesale"};
inline constexpr std::array<const char*, 5> kRegions = {
    "north", "south", "east", "west", "central"};

struct SyntheticConfig {
  std::size_t n_enterprises = 12000;
  std::uint64_t seed = 1;
  std::size_t seq_len = 12;
  std::array<double, 5> industry_mix{0.30, 0.25, 0.20, 0.15, 0.10};
  double low_share = 0.60;
  double medium_share = 0.25;
  double high_share = 0.15;
  double label_noise = 0.05;
  double missing_rate = 0.03;

  void validate() const;
};

// Seeded firm-level generator. Each firm draws from its own substream of
// (seed, firm index), so output is independent of generation order. Firms
// follow a seasonal AR(1) revenue process with industry character; planted
// regimes then distort tax_paid (under-reporting on a subset of quarters)
// and, for high risk, add invoice spikes decoupled from revenue. Labels are
// the regime with a small flip probability; entries go missing at
// missing_rate (never below 2 present per channel).
std::vector<EnterpriseRecord> generate_synthetic(const SyntheticConfig& cfg);

}  // namespace taxrisk
