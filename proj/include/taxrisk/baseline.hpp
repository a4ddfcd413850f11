#pragma once

#include "taxrisk/dense.hpp"
#include "taxrisk/metrics.hpp"
#include "taxrisk/preprocess.hpp"
#include "taxrisk/trainer.hpp"

namespace taxrisk {

// Multinomial logistic regression over [x_static | flattened x_series],
// trained with the same optimizer and early-stopping scheme as the hybrid
// but on cross-entropy alone. Weights start at zero (convex objective).
class LogisticRegression {
 public:
  LogisticRegression() = default;
  explicit LogisticRegression(std::size_t feature_dim);

  static Tensor features(const Prepared& data);

  TrainResult train(const Prepared& train, const Prepared& val, const TrainConfig& cfg);
  Tensor predict_probs(const Tensor& features) const;
  MetricsReport evaluate(const Prepared& data, const LevelPolicy& policy) const;

  DenseLayer layer;
};

}  // namespace taxrisk
