#include "taxrisk/record.hpp"

#include <cmath>

namespace taxrisk {

namespace {
std::optional<std::string> check_channel(const Channel& ch, const char* name,
                                         std::size_t seq_len, std::size_t expected_len,
                                         bool nonnegative) {
  if (ch.size() != expected_len) {
    return std::string(name) + " length " + std::to_string(ch.size()) +
           " differs from the record's other channels";
  }
  if (ch.size() > seq_len) {
    return std::string(name) + " length " + std::to_string(ch.size()) +
           " exceeds seq_len " + std::to_string(seq_len);
  }
  std::size_t present = 0;
  for (const auto& v : ch) {
    if (!v) continue;
    ++present;
    if (!std::isfinite(*v)) return std::string(name) + " holds a non-finite value";
    if (nonnegative && *v < 0.0) return std::string(name) + " must be nonnegative";
  }
  if (present < 2) {
    return std::string(name) + " has " + std::to_string(present) +
           " present quarters, need at least 2";
  }
  return std::nullopt;
}
}  // namespace

std::optional<std::string> validate_record(const EnterpriseRecord& rec, std::size_t seq_len) {
  if (rec.id.empty()) return std::string("id is empty");
  if (rec.industry.empty()) return std::string("industry is empty");
  if (rec.region.empty()) return std::string("region is empty");
  if (!std::isfinite(rec.company_size) || rec.company_size <= 0.0) {
    return std::string("company_size must be positive");
  }
  if (!std::isfinite(rec.registered_capital) || rec.registered_capital < 0.0) {
    return std::string("registered_capital must be nonnegative");
  }
  if (!std::isfinite(rec.compliance_score) || rec.compliance_score < 0.0 ||
      rec.compliance_score > 1.0) {
    return std::string("compliance_score must lie in [0,1]");
  }
  const std::size_t len = rec.revenue.size();
  if (len == 0) return std::string("series is empty");
  const bool nonneg[4] = {true, false, false, true};
  for (std::size_t c = 0; c < kChannelNames.size(); ++c) {
    if (auto err = check_channel(rec.channel(c), kChannelNames[c], seq_len, len, nonneg[c])) {
      return err;
    }
  }
  return std::nullopt;
}

}  // namespace taxrisk
