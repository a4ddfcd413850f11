#pragma once

#include <string>
#include <vector>

#include "taxrisk/record.hpp"

namespace taxrisk {

struct Reject {
  std::size_t line = 0;  // 1-based line in the source file
  std::string reason;
};

struct LoadResult {
  std::vector<EnterpriseRecord> records;
  std::vector<std::size_t> lines;  // source line per kept record
  std::vector<Reject> rejects;
};

// One JSON document per line; missing quarter values are nulls. Lines that
// fail to parse or violate record invariants land in rejects instead of
// aborting the load. Throws IoError if the file cannot be read.
LoadResult load_dataset(const std::string& path, std::size_t seq_len);

// Writes records in the same schema. Throws IoError on failure.
void save_dataset(const std::vector<EnterpriseRecord>& records, const std::string& path);

// JSONL of {"line": n, "reason": "..."} entries.
void save_rejects(const std::vector<Reject>& rejects, const std::string& path);

// Flat inspection export: one row per enterprise-quarter, missing entries
// left empty. Not a load format; JSONL stays canonical.
void save_dataset_csv(const std::vector<EnterpriseRecord>& records, const std::string& path);

}  // namespace taxrisk
