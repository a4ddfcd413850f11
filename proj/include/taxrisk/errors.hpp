#pragma once

#include <stdexcept>
#include <string>

namespace taxrisk {

// Error taxonomy shared across modules. The CLI maps these onto its exit
// code contract (2 validation, 3 I/O, 4 divergence).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct InvalidInputError : Error { using Error::Error; };
struct InvalidLabelError : Error { using Error::Error; };
struct InvalidDistributionError : Error { using Error::Error; };
struct StateError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct CalibrationError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct ConfigError : ValidationError { using ValidationError::ValidationError; };
struct CheckpointError : Error { using Error::Error; };
struct EvaluationError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace taxrisk
