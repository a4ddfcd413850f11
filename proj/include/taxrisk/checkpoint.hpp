#pragma once

#include <string>

#include "taxrisk/config.hpp"
#include "taxrisk/hybrid_model.hpp"
#include "taxrisk/preprocess.hpp"

namespace taxrisk {

inline constexpr std::int64_t kCheckpointFormatVersion = 1;
inline constexpr std::int64_t kStatsFormatVersion = 1;
inline constexpr std::int64_t kManifestFormatVersion = 1;

// Single JSON document: format_version, resolved config, preprocessing
// statistics, anomaly threshold, and every parameter with g17 values.
// save -> load -> save is byte-identical.
std::string checkpoint_json(const HybridModel& model, const PreprocessStats& stats,
                            const RunConfig& cfg);
void save_checkpoint(const HybridModel& model, const PreprocessStats& stats,
                     const RunConfig& cfg, const std::string& path);

struct LoadedCheckpoint {
  HybridModel model;
  PreprocessStats stats;
  RunConfig config;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Standalone preprocessing artifact documenting the exact tensor column
// order next to the fitted statistics.
void save_stats_artifact(const PreprocessStats& stats, const std::string& path);

}  // namespace taxrisk
