#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "nnn/estimate.hpp"
#include "nnn/spatial_index.hpp"

namespace nnn {

enum class nonlinearity { none, squashed };

std::string_view to_string(nonlinearity kind);
nonlinearity parse_nonlinearity(std::string_view text);  // throws invalid_config

inline constexpr double kSquashLow = 0.01;
inline constexpr double kSquashHigh = 0.40;

/// Stationary Gaussian random field with exponential covariance
/// C(h) = std^2 * exp(-3h / range), shifted by mean and optionally squashed.
struct field_spec {
  double mean = 0.2;
  double std = 0.03;
  double range = 1500.0;
  nonlinearity transform = nonlinearity::squashed;
  std::uint64_t seed = 0;

  // Throws invalid_config.
  void validate() const;
};

/// Logistic map onto (kSquashLow, kSquashHigh) that fixes `mean` and has unit slope there:
/// lo + (hi - lo) * logistic(logit(p) + (v - mean) / ((hi - lo) p (1 - p))), p = (mean - lo) / (hi - lo).
double squash(double value, double mean);

/// Draws the field on the grid's cell centers by dense Cholesky factorization of the
/// covariance matrix. If the factorization fails, 1e-10 * std^2 is added to the diagonal once
/// before throwing non_positive_definite.
surface generate_field(const field_spec& spec, const grid_spec& grid);

/// Picks n distinct cell centers uniformly at random and reports the field value there, plus
/// optional Gaussian measurement noise. Throws too_many_wells if n exceeds the cell count.
sample_set sample_wells(const surface& field, std::size_t n, std::uint64_t seed,
                        double noise_std = 0.0);

}  // namespace nnn
