#include "ladder/error.hpp"

namespace ladder {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::no_known_tokens: return "NoKnownTokens";
    case ErrorCode::missing_fine_score: return "MissingFineScore";
    case ErrorCode::non_monotone_thresholds: return "NonMonotoneThresholds";
    case ErrorCode::partition_mismatch: return "PartitionMismatch";
    case ErrorCode::empty_level: return "EmptyLevel";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::degenerate_input: return "DegenerateInput";
    case ErrorCode::invalid_spec: return "InvalidSpec";
    case ErrorCode::manifest_error: return "ManifestError";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::non_finite_value: return "NonFiniteValue";
    case ErrorCode::io_error: return "IOError";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::non_finite_loss: return "NonFiniteLoss";
  }
  return "Unknown";
}

}  // namespace ladder
