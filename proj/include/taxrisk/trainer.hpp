#pragma once

#include <optional>
#include <string>
#include <vector>

#include "taxrisk/adam.hpp"
#include "taxrisk/fusion.hpp"
#include "taxrisk/hybrid_model.hpp"
#include "taxrisk/metrics.hpp"
#include "taxrisk/preprocess.hpp"

namespace taxrisk {

struct TrainConfig {
  std::size_t max_epochs = 100;
  std::size_t batch_size = 64;
  double lambda_ae = 0.1;
  std::size_t patience = 10;  // epochs without validation improvement
  std::uint64_t seed = 1;
  AdamConfig adam;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_ce = 0.0;
  double val_ce = 0.0;
  double train_ae = 0.0;
  double val_ae = 0.0;
};

using LossCurve = std::vector<EpochRecord>;

struct TrainResult {
  LossCurve curve;
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
};

// Mini-batch Adam over the joint objective with early stopping on
// validation total loss; the best-validation parameter snapshot is restored
// before returning. Every labeled record is required; the low-risk label
// defines the reconstruction mask.
TrainResult train_hybrid(HybridModel& model, const Prepared& train,
                         const Prepared& val, const TrainConfig& cfg);

// First epoch at which the 5-epoch moving average of validation loss has
// changed by less than 1% relative for 5 consecutive epochs.
std::optional<std::size_t> convergence_epoch(const LossCurve& curve);

// CSV with the fixed header epoch,train_loss,val_loss,train_ce,val_ce,
// train_ae,val_ae and 17-significant-digit values; optionally an SVG line
// plot of the two total losses.
void emit_loss_curve(const LossCurve& curve, const std::string& csv_path,
                     const std::string& svg_path = "");

// Classification + anomaly report over preprocessed, fully labeled data.
MetricsReport evaluate_hybrid(const HybridModel& model, const Prepared& data,
                              const LevelPolicy& policy);

// Loss components of the current model on a prepared dataset.
struct LossBreakdown {
  double total = 0.0;
  double ce = 0.0;
  double ae = 0.0;
};
LossBreakdown model_losses(const HybridModel& model, const Prepared& data, double lambda_ae);

// Per-sample reconstruction errors restricted to low-risk-labeled samples.
std::vector<double> low_risk_errors(const HybridModel& model, const Prepared& data);

}  // namespace taxrisk
