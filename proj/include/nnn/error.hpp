#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nnn {

enum class error_code {
  // data / input
  invalid_sample,
  duplicate_coordinate,
  too_few_samples,
  not_enough_neighbors,
  empty_input,
  empty_samples,
  empty_batch,
  too_few_rows,
  too_many_wells,
  zero_target,
  parse_error,
  io_error,
  // configuration / contract
  invalid_config,
  invalid_width,
  width_mismatch,
  shape_mismatch,
  // numerical
  non_finite_activation,
  divergence,
  singular_system,
  non_positive_definite,
};

enum class error_category { config, data, numerical };

constexpr std::string_view to_string(error_code code) {
  switch (code) {
    case error_code::invalid_sample: return "InvalidSample";
    case error_code::duplicate_coordinate: return "DuplicateCoordinate";
    case error_code::too_few_samples: return "TooFewSamples";
    case error_code::not_enough_neighbors: return "NotEnoughNeighbors";
    case error_code::empty_input: return "EmptyInput";
    case error_code::empty_samples: return "EmptySamples";
    case error_code::empty_batch: return "EmptyBatch";
    case error_code::too_few_rows: return "TooFewRows";
    case error_code::too_many_wells: return "TooManyWells";
    case error_code::zero_target: return "ZeroTarget";
    case error_code::parse_error: return "ParseError";
    case error_code::io_error: return "IoError";
    case error_code::invalid_config: return "InvalidConfig";
    case error_code::invalid_width: return "InvalidWidth";
    case error_code::width_mismatch: return "WidthMismatch";
    case error_code::shape_mismatch: return "ShapeMismatch";
    case error_code::non_finite_activation: return "NonFiniteActivation";
    case error_code::divergence: return "Divergence";
    case error_code::singular_system: return "SingularSystem";
    case error_code::non_positive_definite: return "NonPositiveDefinite";
  }
  return "Unknown";
}

constexpr error_category category_of(error_code code) {
  switch (code) {
    case error_code::invalid_config:
    case error_code::invalid_width:
    case error_code::width_mismatch:
    case error_code::shape_mismatch:
      return error_category::config;
    case error_code::non_finite_activation:
    case error_code::divergence:
    case error_code::singular_system:
    case error_code::non_positive_definite:
      return error_category::numerical;
    default:
      return error_category::data;
  }
}

class error : public std::runtime_error {
public:
  error(error_code code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  error_code code() const noexcept { return code_; }
  error_category category() const noexcept { return category_of(code_); }

private:
  error_code code_;
};

}  // namespace nnn
