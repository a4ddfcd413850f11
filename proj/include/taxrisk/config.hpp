#pragma once

#include <string>

#include "taxrisk/fusion.hpp"
#include "taxrisk/hybrid_model.hpp"
#include "taxrisk/split.hpp"
#include "taxrisk/synthetic.hpp"
#include "taxrisk/trainer.hpp"

namespace taxrisk {

// Everything a run needs, from one JSON config file. Unknown keys are
// rejected so typos cannot silently fall back to defaults. A single seed
// feeds every random stream (generation, split, init, batch order).
struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<std::size_t> dnn_hidden{64, 32};
  TransformerConfig transformer;
  std::size_t ae_latent = 16;
  double ae_quantile = 0.95;
  LevelPolicy policy;
  TrainConfig train;
  SyntheticConfig synthetic;
  SplitRatios split;

  void validate() const;

  // Model shape given the fitted static width (vocabulary dependent).
  ModelConfig model_config(std::size_t static_dim) const;
};

// Strict parse; throws ConfigError on unknown keys or bad types/values.
RunConfig parse_run_config_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Canonical serialization (fixed key order, g17 numbers); reruns byte-match.
class JsonWriter;
void write_run_config(JsonWriter& w, const RunConfig& cfg);
std::string resolved_config_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace taxrisk
