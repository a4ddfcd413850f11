#pragma once

#include <array>
#include <string>
#include <vector>

#include "taxrisk/jsonl.hpp"
#include "taxrisk/record.hpp"
#include "taxrisk/tensor.hpp"

namespace taxrisk {

// Z-score statistics and category vocabularies fitted on the training split
// only. Numeric scaling uses the population standard deviation; a constant
// feature falls back to std 1 with a warning.
struct PreprocessStats {
  std::size_t seq_len = 0;
  // Static numerics in order: company_size, registered_capital, compliance_score.
  std::array<double, 3> static_mean{};
  std::array<double, 3> static_std{};
  // Sorted training categories plus a reserved "__unknown__" last slot.
  std::vector<std::string> industry_vocab;
  std::vector<std::string> region_vocab;
  // Per-channel series stats in kChannelNames order, over interpolated
  // training series.
  std::array<double, 4> channel_mean{};
  std::array<double, 4> channel_std{};

  std::size_t static_width() const {
    return 3 + industry_vocab.size() + region_vocab.size();
  }
  // Human-readable column names in tensor order, for the stats artifact.
  std::vector<std::string> static_columns() const;
};

inline constexpr const char* kUnknownCategory = "__unknown__";

// Fills interior gaps linearly between nearest present neighbors and
// extends head/tail gaps with the nearest present value. Throws
// ValidationError with fewer than 2 present values.
std::vector<double> interpolate_missing(const Channel& channel);

PreprocessStats fit_preprocessor(const std::vector<EnterpriseRecord>& train,
                                 std::size_t seq_len,
                                 std::vector<std::string>* warnings = nullptr);

struct Prepared {
  Tensor x_static;  // [n, static_width]
  Tensor x_series;  // [n, seq_len, 4]; shorter histories left-padded with zeros
  Tensor mask;      // [n, seq_len], 1 where a real quarter exists
  std::vector<int> labels;  // -1 where the record carries no label
  std::vector<std::string> ids;
  std::vector<Reject> rejects;  // index-based (line = position in input)
};

Prepared apply_preprocessor(const PreprocessStats& stats,
                            const std::vector<EnterpriseRecord>& records);

}  // namespace taxrisk
