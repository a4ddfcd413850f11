#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taxrisk/record.hpp"

namespace taxrisk {

struct SplitRatios {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;

  void validate() const;
};

struct DatasetSplit {
  std::vector<EnterpriseRecord> train;
  std::vector<EnterpriseRecord> validation;
  std::vector<EnterpriseRecord> test;
};

// Stratified split on (label, final_quarter). Within each stratum the
// records are shuffled by a seeded substream and apportioned by largest
// remainder, so each stratum's ratio error is at most one record. Strata
// smaller than 3 are merged into the nearest stratum (same label and
// closest quarter preferred) with a warning.
DatasetSplit split_dataset(const std::vector<EnterpriseRecord>& records,
                           const SplitRatios& ratios, std::uint64_t seed,
                           std::vector<std::string>* warnings = nullptr);

}  // namespace taxrisk
