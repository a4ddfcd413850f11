#pragma once

#include <string>

namespace taxrisk {

// Class codes are fixed everywhere (files, metrics, checkpoints).
enum class RiskLevel : int { Low = 0, Medium = 1, High = 2 };

inline const char* to_string(RiskLevel lvl) {
  switch (lvl) {
    case RiskLevel::Low: return "low";
    case RiskLevel::Medium: return "medium";
    case RiskLevel::High: return "high";
  }
  return "?";
}

RiskLevel risk_level_from_string(const std::string& s);

}  // namespace taxrisk
