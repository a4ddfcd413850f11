#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "taxrisk/risk_level.hpp"

namespace taxrisk {

// Quarterly channels in fixed file/tensor order.
inline constexpr std::array<const char*, 4> kChannelNames = {
    "revenue", "profit", "tax_paid", "invoice_count"};

using Channel = std::vector<std::optional<double>>;

struct EnterpriseRecord {
  std::string id;
  std::string industry;
  std::string region;
  double company_size = 0.0;        // employees, > 0
  double registered_capital = 0.0;  // >= 0
  double compliance_score = 0.0;    // in [0,1]
  Channel revenue;
  Channel profit;
  Channel tax_paid;
  Channel invoice_count;
  std::optional<RiskLevel> label;
  // Calendar index of the last quarter covered by the series; drives the
  // temporal half of the stratified split.
  long long final_quarter = 0;

  const Channel& channel(std::size_t i) const {
    switch (i) {
      case 0: return revenue;
      case 1: return profit;
      case 2: return tax_paid;
      default: return invoice_count;
    }
  }
  Channel& channel(std::size_t i) {
    return const_cast<Channel&>(static_cast<const EnterpriseRecord*>(this)->channel(i));
  }
};

// Empty result means the record is acceptable; otherwise the reason names
// the offending field. seq_len bounds the series length.
std::optional<std::string> validate_record(const EnterpriseRecord& rec, std::size_t seq_len);

}  // namespace taxrisk
