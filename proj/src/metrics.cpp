#include "taxrisk/metrics.hpp"

#include "taxrisk/errors.hpp"

namespace taxrisk {

MetricsReport metrics_from_confusion(const Confusion& confusion) {
  MetricsReport report;
  report.confusion = confusion;
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) total += confusion[i][j];
    correct += confusion[i][i];
  }
  if (total == 0) throw EvaluationError("confusion matrix is empty");
  report.evaluated = total;
  report.accuracy = static_cast<double>(correct) / static_cast<double>(total);

  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t tp = confusion[c][c], support = 0, predicted = 0;
    for (std::size_t j = 0; j < 3; ++j) support += confusion[c][j];
    for (std::size_t i = 0; i < 3; ++i) predicted += confusion[i][c];
    ClassMetrics& m = report.per_class[c];
    m.support = support;
    m.precision = predicted == 0 ? 0.0
                                 : static_cast<double>(tp) / static_cast<double>(predicted);
    m.recall = support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(support);
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    report.macro_precision += m.precision / 3.0;
    report.macro_recall += m.recall / 3.0;
    report.macro_f1 += m.f1 / 3.0;
  }
  return report;
}

MetricsReport compute_metrics(const std::vector<int>& truth,
                              const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) {
    throw EvaluationError("truth and prediction counts differ");
  }
  Confusion confusion{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] > 2 || predicted[i] < 0 || predicted[i] > 2) {
      throw InvalidLabelError("class codes must lie in {0,1,2}");
    }
    confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])] += 1;
  }
  return metrics_from_confusion(confusion);
}

double macro_f1(const Confusion& confusion) {
  return metrics_from_confusion(confusion).macro_f1;
}

double macro_recall(const Confusion& confusion) {
  return metrics_from_confusion(confusion).macro_recall;
}

}  // namespace taxrisk
