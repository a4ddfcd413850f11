#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace taxrisk {

using Confusion = std::array<std::array<std::size_t, 3>, 3>;  // rows true, cols predicted

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  Confusion confusion{};
  std::size_t evaluated = 0;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::array<ClassMetrics, 3> per_class{};
  // Fraction of each true class whose reconstruction error exceeded the
  // anomaly threshold; filled by model evaluation, 0 otherwise.
  std::array<double, 3> anomaly_flag_rate{};
};

// Derives every rate from the confusion matrix. A class with no true and no
// predicted samples scores precision = recall = f1 = 0. Throws
// EvaluationError when the matrix is all zero.
MetricsReport metrics_from_confusion(const Confusion& confusion);

MetricsReport compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted);

double macro_f1(const Confusion& confusion);
double macro_recall(const Confusion& confusion);

}  // namespace taxrisk
