#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace proxyforge {

enum class Errc {
  // ingestion
  bad_file,
  bad_registry,
  missing_cell,
  zero_control,
  unknown_metric,
  duplicate_cell,
  // statistics
  empty_input,
  length_mismatch,
  zero_variance,
  degenerate_variance,
  // proxies and fronts
  dimension_mismatch,
  all_zero_weights,
  kind_mismatch,
  point_below_reference,
  invalid_bin_spec,
  invalid_budget,
  non_finite_objective,
  // simulation
  invalid_covariance,
  unknown_preset,
  invalid_config,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::bad_file: return "BadFile";
    case Errc::bad_registry: return "BadRegistry";
    case Errc::missing_cell: return "MissingCell";
    case Errc::zero_control: return "ZeroControl";
    case Errc::unknown_metric: return "UnknownMetric";
    case Errc::duplicate_cell: return "DuplicateCell";
    case Errc::empty_input: return "EmptyInput";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::zero_variance: return "ZeroVariance";
    case Errc::degenerate_variance: return "DegenerateVariance";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::all_zero_weights: return "AllZeroWeights";
    case Errc::kind_mismatch: return "KindMismatch";
    case Errc::point_below_reference: return "PointBelowReference";
    case Errc::invalid_bin_spec: return "InvalidBinSpec";
    case Errc::invalid_budget: return "InvalidBudget";
    case Errc::non_finite_objective: return "NonFiniteObjective";
    case Errc::invalid_covariance: return "InvalidCovariance";
    case Errc::unknown_preset: return "UnknownPreset";
    case Errc::invalid_config: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace proxyforge
