#include "taxrisk/fusion.hpp"

#include <cmath>

#include "taxrisk/errors.hpp"
#include "taxrisk/ops.hpp"

namespace taxrisk {

RiskLevel risk_level_from_string(const std::string& s) {
  if (s == "low") return RiskLevel::Low;
  if (s == "medium") return RiskLevel::Medium;
  if (s == "high") return RiskLevel::High;
  throw ValidationError("unknown risk level \"" + s + "\"");
}

void LevelPolicy::validate() const {
  if (mode == Mode::Threshold) {
    if (!high_threshold) throw ConfigError("threshold policy requires a high threshold");
    if (!(*high_threshold > 0.0 && *high_threshold < 1.0)) {
      throw ConfigError("policy high threshold must lie in (0,1)");
    }
  }
}

Tensor fuse(const Tensor& h_s, const Tensor& h_t, const Tensor& z) {
  return concat_cols({&h_s, &h_t, &z});
}

RiskLevel assign_level(const double* p, const LevelPolicy& policy) {
  policy.validate();
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(p[i])) throw InvalidDistributionError("probability row holds non-finite values");
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidDistributionError("probability row sums to " + std::to_string(sum));
  }
  if (policy.mode == LevelPolicy::Mode::Threshold) {
    if (p[2] >= *policy.high_threshold) return RiskLevel::High;
    return p[1] >= p[0] ? RiskLevel::Medium : RiskLevel::Low;
  }
  // Argmax with ties resolved toward the higher risk level.
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (p[i] >= p[best]) best = i;
  }
  return static_cast<RiskLevel>(best);
}

RiskLevel assign_level(const std::vector<double>& probs, const LevelPolicy& policy) {
  if (probs.size() != 3) {
    throw DimensionError("level assignment expects 3 probabilities, got " +
                         std::to_string(probs.size()));
  }
  return assign_level(probs.data(), policy);
}

double masked_ae_mean(const Tensor& ae_errors, const std::vector<bool>& normal_mask) {
  if (ae_errors.size() != normal_mask.size()) {
    throw DimensionError("ae error count " + std::to_string(ae_errors.size()) +
                         " vs mask size " + std::to_string(normal_mask.size()));
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < normal_mask.size(); ++i) {
    if (!normal_mask[i]) continue;
    sum += ae_errors[i];
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double total_loss(const Tensor& probs, const std::vector<int>& labels,
                  const Tensor& ae_errors, const std::vector<bool>& normal_mask,
                  double lambda_ae) {
  if (lambda_ae < 0.0) throw ConfigError("lambda_ae must be nonnegative");
  return cross_entropy(probs, labels) + lambda_ae * masked_ae_mean(ae_errors, normal_mask);
}

}  // namespace taxrisk
