#pragma once

#include <optional>
#include <vector>

#include "taxrisk/dense.hpp"
#include "taxrisk/risk_level.hpp"
#include "taxrisk/tensor.hpp"

namespace taxrisk {

struct LevelPolicy {
  enum class Mode { Argmax, Threshold };
  Mode mode = Mode::Argmax;
  std::optional<double> high_threshold;  // required in threshold mode

  void validate() const;
};

// Columnwise concatenation [h_s | h_t | z] in that fixed order.
Tensor fuse(const Tensor& h_s, const Tensor& h_t, const Tensor& z);

// Map one probability row to a discrete level. Argmax breaks ties toward
// the higher risk level; threshold mode assigns High iff p_high >= p_h and
// otherwise argmaxes over {Low, Medium}. The row must sum to 1 within 1e-9.
RiskLevel assign_level(const double* probs, const LevelPolicy& policy);
RiskLevel assign_level(const std::vector<double>& probs, const LevelPolicy& policy);

// cross_entropy(probs, labels) + lambda_ae * mean(ae_errors over
// normal_mask). An all-false mask contributes 0.
double total_loss(const Tensor& probs, const std::vector<int>& labels,
                  const Tensor& ae_errors, const std::vector<bool>& normal_mask,
                  double lambda_ae);

// Masked mean of the AE errors alone; 0 when the mask is empty.
double masked_ae_mean(const Tensor& ae_errors, const std::vector<bool>& normal_mask);

}  // namespace taxrisk
