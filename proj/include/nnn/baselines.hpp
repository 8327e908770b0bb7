#pragma once

#include <cstddef>
#include <vector>

#include "nnn/spatial_index.hpp"

namespace nnn {

struct idw_params {
  double power = 2.0;
  std::size_t m = 0;  // 0 = all samples
};

/// Inverse distance weighting over the m nearest samples (or all). A query that coincides
/// with a sample returns that sample's value exactly. Throws invalid_config for power <= 0.
double idw_estimate(const spatial_index& index, point2 query, const idw_params& params);

/// Exponential semivariogram with practical range:
/// gamma(h) = nugget + (sill - nugget) * (1 - exp(-3h / range)) for h > 0, gamma(0) = 0.
struct variogram_model {
  double nugget = 0.0;
  double sill = 1.0;
  double range = 1.0;
  bool degenerate = false;  // fitted on a field with no spatial variance; sill == nugget

  double gamma(double h) const;
  double covariance(double h) const { return sill - gamma(h); }
};

struct lag_bin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t pairs = 0;
  double mean_lag = 0.0;
  double semivariance = 0.0;
};

struct variogram_settings {
  std::size_t lag_bins = 12;
  std::size_t min_pairs = 5;  // bins with fewer pairs are dropped from the fit
};

/// Equal-width bins from 0 to half the sample bounding-box diagonal; a pair at exactly the
/// maximum lag lands in the last bin, longer pairs are ignored.
std::vector<lag_bin> empirical_variogram(const sample_set& samples, std::size_t lag_bins);

/// Bin index for a pairwise distance, or -1 when the distance exceeds max_lag.
long lag_bin_index(double distance, double max_lag, std::size_t lag_bins);

/// Least-squares fit of the exponential model to the empirical semivariogram. Throws
/// too_few_samples for N < 10. A field with no variance yields a nugget-only model with
/// degenerate set.
variogram_model fit_variogram(const sample_set& samples, const variogram_settings& settings = {});

struct kriging_result {
  double value = 0.0;
  double variance = 0.0;
  std::vector<double> weights;       // one per neighbor, in neighbor order
  std::vector<std::size_t> neighbors;
  double lagrange = 0.0;
};

/// Ordinary kriging over the m nearest samples: covariances C(h) = sill - gamma(h) and the
/// constraint sum(weights) = 1 enforced with a Lagrange multiplier, solved densely.
/// A degenerate (pure nugget) variogram gives equal weights 1/m. Throws singular_system for
/// any other system that cannot be solved (never regularizes).
kriging_result kriging_estimate(const spatial_index& index, point2 query,
                                const variogram_model& variogram, std::size_t m);

}  // namespace nnn
