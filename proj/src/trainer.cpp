#include "taxrisk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "taxrisk/errors.hpp"
#include "taxrisk/format.hpp"
#include "taxrisk/ops.hpp"
#include "taxrisk/rng.hpp"

namespace taxrisk {

void TrainConfig::validate() const {
  if (max_epochs == 0) throw ConfigError("train.max_epochs must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (patience == 0) throw ConfigError("train.patience must be positive");
  if (patience >= max_epochs) {
    throw ConfigError("train.patience must be smaller than train.max_epochs");
  }
  if (lambda_ae < 0.0) throw ConfigError("train.lambda_ae must be nonnegative");
  if (adam.lr <= 0.0) throw ConfigError("train.lr must be positive");
}

namespace {
constexpr std::size_t kEvalChunk = 512;

struct Batch {
  Tensor x_static;
  Tensor x_series;
  Tensor mask;
  std::vector<int> labels;
  std::vector<bool> normal;
};

Batch gather(const Prepared& d, const std::vector<std::size_t>& order,
             std::size_t from, std::size_t to) {
  const std::size_t n = to - from;
  const std::size_t sw = d.x_static.cols();
  const std::size_t seq = d.mask.cols();
  const std::size_t ch = d.x_series.shape()[2];
  Batch b;
  b.x_static = Tensor::matrix(n, sw);
  b.x_series = Tensor({n, seq, ch});
  b.mask = Tensor::matrix(n, seq);
  b.labels.resize(n);
  b.normal.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[from + k];
    std::copy(d.x_static.data() + src * sw, d.x_static.data() + (src + 1) * sw,
              b.x_static.data() + k * sw);
    std::copy(d.x_series.data() + src * seq * ch, d.x_series.data() + (src + 1) * seq * ch,
              b.x_series.data() + k * seq * ch);
    std::copy(d.mask.data() + src * seq, d.mask.data() + (src + 1) * seq,
              b.mask.data() + k * seq);
    b.labels[k] = d.labels[src];
    b.normal[k] = d.labels[src] == static_cast<int>(RiskLevel::Low);
  }
  return b;
}

void require_labeled(const Prepared& d, const char* which) {
  if (d.labels.empty()) {
    throw ValidationError(std::string(which) + " split is empty");
  }
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.labels[i] < 0 || d.labels[i] > 2) {
      throw InvalidLabelError(std::string(which) + " record " + std::to_string(i) +
                              " (" + d.ids[i] + ") has no usable label");
    }
  }
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}
}  // namespace

LossBreakdown model_losses(const HybridModel& model, const Prepared& data, double lambda_ae) {
  const std::size_t n = data.labels.size();
  const auto order = identity_order(n);
  double ce_sum = 0.0, ae_sum = 0.0;
  std::size_t ae_count = 0;
  for (std::size_t from = 0; from < n; from += kEvalChunk) {
    const std::size_t to = std::min(n, from + kEvalChunk);
    const Batch b = gather(data, order, from, to);
    const HybridModel::Output out = model.infer(b.x_static, b.x_series, b.mask);
    ce_sum += cross_entropy(out.probs, b.labels) * static_cast<double>(to - from);
    for (std::size_t k = 0; k < b.normal.size(); ++k) {
      if (!b.normal[k]) continue;
      ae_sum += out.recon_errors[k];
      ++ae_count;
    }
  }
  LossBreakdown out;
  out.ce = ce_sum / static_cast<double>(n);
  out.ae = ae_count == 0 ? 0.0 : ae_sum / static_cast<double>(ae_count);
  out.total = out.ce + lambda_ae * out.ae;
  return out;
}

TrainResult train_hybrid(HybridModel& model, const Prepared& train,
                         const Prepared& val, const TrainConfig& cfg) {
  TrainResult result;
  if (cfg.max_epochs == 0) return result;  // untouched model, empty curve
  if (cfg.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (cfg.patience == 0) throw ConfigError("train.patience must be positive");
  if (cfg.lambda_ae < 0.0) throw ConfigError("train.lambda_ae must be nonnegative");
  require_labeled(train, "training");
  require_labeled(val, "validation");

  const std::size_t n = train.labels.size();
  std::vector<Parameter*> params = model.parameters();
  AdamState adam(params, cfg.adam);
  Rng shuffle_rng(cfg.seed, 2);  // batch-order substream

  std::vector<std::size_t> order = identity_order(n);
  double best_val = 0.0;
  std::vector<Tensor> best_params;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t from = 0; from < n; from += cfg.batch_size) {
      const std::size_t to = std::min(n, from + cfg.batch_size);
      Batch b = gather(train, order, from, to);
      HybridModel::Cache cache;
      model.forward(b.x_static, b.x_series, b.mask, cache);
      const double loss = model.backward(cache, b.labels, b.normal, cfg.lambda_ae);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(from / cfg.batch_size));
      }
      adam.step();
    }

    const LossBreakdown tr = model_losses(model, train, cfg.lambda_ae);
    const LossBreakdown va = model_losses(model, val, cfg.lambda_ae);
    if (!std::isfinite(tr.total) || !std::isfinite(va.total)) {
      throw DivergenceError("non-finite epoch loss at epoch " + std::to_string(epoch));
    }
    result.curve.push_back({epoch, tr.total, va.total, tr.ce, va.ce, tr.ae, va.ae});

    if (result.best_epoch == 0 || va.total < best_val) {
      best_val = va.total;
      result.best_epoch = epoch;
      best_params.clear();
      for (const Parameter* p : params) best_params.push_back(p->value);
      stale = 0;
    } else {
      ++stale;
      if (stale >= cfg.patience) break;
    }
  }

  if (result.best_epoch > 0) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_params[i];
    result.best_val_loss = best_val;
  }
  return result;
}

std::optional<std::size_t> convergence_epoch(const LossCurve& curve) {
  constexpr std::size_t kWindow = 5;
  constexpr std::size_t kRun = 5;
  constexpr double kRelTol = 0.01;
  if (curve.size() < kWindow + kRun) return std::nullopt;

  std::vector<double> ma(curve.size(), 0.0);
  for (std::size_t i = kWindow - 1; i < curve.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < kWindow; ++k) s += curve[i - k].val_loss;
    ma[i] = s / static_cast<double>(kWindow);
  }
  std::size_t run = 0;
  for (std::size_t i = kWindow; i < curve.size(); ++i) {
    const double rel = std::abs(ma[i] - ma[i - 1]) / std::max(std::abs(ma[i - 1]), 1e-12);
    if (rel < kRelTol) {
      if (++run >= kRun) return curve[i].epoch;
    } else {
      run = 0;
    }
  }
  return std::nullopt;
}

void emit_loss_curve(const LossCurve& curve, const std::string& csv_path,
                     const std::string& svg_path) {
  if (curve.empty()) throw ValidationError("loss curve is empty");
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw IoError("cannot open " + csv_path + " for writing");
  csv << "epoch,train_loss,val_loss,train_ce,val_ce,train_ae,val_ae\n";
  for (const EpochRecord& r : curve) {
    csv << r.epoch << ',' << g17(r.train_loss) << ',' << g17(r.val_loss) << ','
        << g17(r.train_ce) << ',' << g17(r.val_ce) << ',' << g17(r.train_ae) << ','
        << g17(r.val_ae) << '\n';
  }
  if (!csv) throw IoError("write failure on " + csv_path);
  if (svg_path.empty()) return;

  std::ofstream svg(svg_path, std::ios::trunc);
  if (!svg) throw IoError("cannot open " + svg_path + " for writing");
  const double w = 800.0, h = 500.0, ml = 70.0, mr = 30.0, mt = 30.0, mb = 60.0;
  double max_loss = 0.0;
  for (const EpochRecord& r : curve) {
    max_loss = std::max({max_loss, r.train_loss, r.val_loss});
  }
  if (max_loss <= 0.0) max_loss = 1.0;
  const double x0 = static_cast<double>(curve.front().epoch);
  const double x1 = static_cast<double>(curve.back().epoch);
  const double span = std::max(x1 - x0, 1.0);
  auto px = [&](double epoch) {
    return ml + (epoch - x0) / span * (w - ml - mr);
  };
  auto py = [&](double loss) { return h - mb - loss / max_loss * (h - mt - mb); };
  auto coord = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\">\n";
  svg << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << coord(ml) << "\" y1=\"" << coord(h - mb) << "\" x2=\""
      << coord(w - mr) << "\" y2=\"" << coord(h - mb) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << coord(ml) << "\" y1=\"" << coord(mt) << "\" x2=\"" << coord(ml)
      << "\" y2=\"" << coord(h - mb) << "\" stroke=\"black\"/>\n";
  const char* names[2] = {"train", "validation"};
  const char* colors[2] = {"#1f77b4", "#ff7f0e"};
  for (int series = 0; series < 2; ++series) {
    svg << "<polyline fill=\"none\" stroke=\"" << colors[series]
        << "\" stroke-width=\"2\" points=\"";
    for (const EpochRecord& r : curve) {
      const double loss = series == 0 ? r.train_loss : r.val_loss;
      svg << coord(px(static_cast<double>(r.epoch))) << ',' << coord(py(loss)) << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << coord(w - mr - 150) << "\" y=\"" << coord(mt + 20 + 20 * series)
        << "\" fill=\"" << colors[series] << "\" font-size=\"14\">" << names[series]
        << " loss</text>\n";
  }
  svg << "<text x=\"" << coord(w / 2) << "\" y=\"" << coord(h - 15)
      << "\" text-anchor=\"middle\" font-size=\"14\">epoch</text>\n";
  svg << "<text x=\"20\" y=\"" << coord(h / 2)
      << "\" transform=\"rotate(-90 20 " << coord(h / 2)
      << ")\" text-anchor=\"middle\" font-size=\"14\">total loss</text>\n";
  svg << "</svg>\n";
  if (!svg) throw IoError("write failure on " + svg_path);
}

MetricsReport evaluate_hybrid(const HybridModel& model, const Prepared& data,
                              const LevelPolicy& policy) {
  if (data.labels.empty()) throw EvaluationError("nothing to evaluate");
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] < 0) {
      throw EvaluationError("record " + data.ids[i] + " has no label");
    }
  }
  policy.validate();

  const std::size_t n = data.labels.size();
  const auto order = identity_order(n);
  std::vector<int> predicted(n);
  std::array<std::size_t, 3> flagged{};
  std::array<std::size_t, 3> support{};
  for (std::size_t from = 0; from < n; from += kEvalChunk) {
    const std::size_t to = std::min(n, from + kEvalChunk);
    const Batch b = gather(data, order, from, to);
    const HybridModel::Output out = model.infer(b.x_static, b.x_series, b.mask);
    for (std::size_t k = 0; k < to - from; ++k) {
      predicted[from + k] =
          static_cast<int>(assign_level(out.probs.data() + k * 3, policy));
      const auto truth = static_cast<std::size_t>(b.labels[k]);
      support[truth] += 1;
      if (flag_anomaly(out.recon_errors[k], model.threshold)) flagged[truth] += 1;
    }
  }

  MetricsReport report = compute_metrics(data.labels, predicted);
  for (std::size_t c = 0; c < 3; ++c) {
    report.anomaly_flag_rate[c] =
        support[c] == 0 ? 0.0
                        : static_cast<double>(flagged[c]) / static_cast<double>(support[c]);
  }
  return report;
}

std::vector<double> low_risk_errors(const HybridModel& model, const Prepared& data) {
  const std::size_t n = data.labels.size();
  const auto order = identity_order(n);
  std::vector<double> errors;
  for (std::size_t from = 0; from < n; from += kEvalChunk) {
    const std::size_t to = std::min(n, from + kEvalChunk);
    const Batch b = gather(data, order, from, to);
    const HybridModel::Output out = model.infer(b.x_static, b.x_series, b.mask);
    for (std::size_t k = 0; k < to - from; ++k) {
      if (b.labels[k] == static_cast<int>(RiskLevel::Low)) {
        errors.push_back(out.recon_errors[k]);
      }
    }
  }
  return errors;
}

}  // namespace taxrisk
