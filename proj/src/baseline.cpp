#include "taxrisk/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "taxrisk/errors.hpp"
#include "taxrisk/fusion.hpp"
#include "taxrisk/ops.hpp"
#include "taxrisk/rng.hpp"

namespace taxrisk {

LogisticRegression::LogisticRegression(std::size_t feature_dim) {
  layer.w = Parameter("baseline.w", Tensor::matrix(feature_dim, 3));
  layer.b = Parameter("baseline.b", Tensor::matrix(1, 3));
  layer.activation = Activation::Identity;
}

Tensor LogisticRegression::features(const Prepared& data) {
  const std::size_t n = data.x_static.rows();
  const Tensor flat = data.x_series.reshaped(
      {n, data.x_series.shape()[1] * data.x_series.shape()[2]});
  return concat_cols({&data.x_static, &flat});
}

Tensor LogisticRegression::predict_probs(const Tensor& feats) const {
  return softmax_rows(layer.infer(feats));
}

TrainResult LogisticRegression::train(const Prepared& train_data, const Prepared& val_data,
                                      const TrainConfig& cfg) {
  TrainResult result;
  if (cfg.max_epochs == 0) return result;
  if (cfg.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (train_data.labels.empty()) throw ValidationError("training split is empty");

  const Tensor train_x = features(train_data);
  const Tensor val_x = features(val_data);
  if (layer.w.value.rows() != train_x.cols()) {
    throw DimensionError("baseline expects " + std::to_string(layer.w.value.rows()) +
                         " features, got " + std::to_string(train_x.cols()));
  }
  for (std::size_t i = 0; i < train_data.labels.size(); ++i) {
    if (train_data.labels[i] < 0) {
      throw InvalidLabelError("training record " + train_data.ids[i] + " has no label");
    }
  }

  AdamState adam(layer.parameters(), cfg.adam);
  Rng shuffle_rng(cfg.seed, 3);  // distinct from the hybrid's batch stream
  const std::size_t n = train_data.labels.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  double best_val = 0.0;
  Tensor best_w, best_b;
  std::size_t stale = 0;

  auto ce_on = [&](const Tensor& x, const std::vector<int>& labels) {
    return cross_entropy(softmax_rows(layer.infer(x)), labels);
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t from = 0; from < n; from += cfg.batch_size) {
      const std::size_t to = std::min(n, from + cfg.batch_size);
      const std::size_t bn = to - from;
      Tensor bx = Tensor::matrix(bn, train_x.cols());
      std::vector<int> by(bn);
      for (std::size_t k = 0; k < bn; ++k) {
        const std::size_t src = order[from + k];
        std::copy(train_x.data() + src * train_x.cols(),
                  train_x.data() + (src + 1) * train_x.cols(),
                  bx.data() + k * train_x.cols());
        by[k] = train_data.labels[src];
      }
      DenseLayer::Cache cache;
      Tensor probs = softmax_rows(layer.forward(bx, cache));
      Tensor dlogits = probs;
      for (std::size_t k = 0; k < bn; ++k) {
        dlogits(k, static_cast<std::size_t>(by[k])) -= 1.0;
      }
      for (double& v : dlogits.values()) v /= static_cast<double>(bn);
      layer.backward(dlogits, cache);
      adam.step();
    }

    const double tr = ce_on(train_x, train_data.labels);
    const double va = ce_on(val_x, val_data.labels);
    if (!std::isfinite(tr) || !std::isfinite(va)) {
      throw DivergenceError("non-finite baseline loss at epoch " + std::to_string(epoch));
    }
    result.curve.push_back({epoch, tr, va, tr, va, 0.0, 0.0});

    if (result.best_epoch == 0 || va < best_val) {
      best_val = va;
      result.best_epoch = epoch;
      best_w = layer.w.value;
      best_b = layer.b.value;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }

  if (result.best_epoch > 0) {
    layer.w.value = best_w;
    layer.b.value = best_b;
    result.best_val_loss = best_val;
  }
  return result;
}

MetricsReport LogisticRegression::evaluate(const Prepared& data,
                                           const LevelPolicy& policy) const {
  if (data.labels.empty()) throw EvaluationError("nothing to evaluate");
  const Tensor probs = predict_probs(features(data));
  std::vector<int> predicted(data.labels.size());
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] < 0) throw EvaluationError("record " + data.ids[i] + " has no label");
    predicted[i] = static_cast<int>(assign_level(probs.data() + i * 3, policy));
  }
  return compute_metrics(data.labels, predicted);
}

}  // namespace taxrisk
