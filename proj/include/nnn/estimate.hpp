#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nnn/spatial_index.hpp"
#include "nnn/training.hpp"

namespace nnn {

/// Regular grid of cell centers. Cell (i, j) sits at
/// (x_min + (i + 0.5) * dx, y_min + (j + 0.5) * dy); row-major index is j * nx + i.
struct grid_spec {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  std::size_t nx = 1;
  std::size_t ny = 1;

  // Throws invalid_config.
  void validate() const;

  std::size_t cells() const { return nx * ny; }
  double dx() const { return (x_max - x_min) / static_cast<double>(nx); }
  double dy() const { return (y_max - y_min) / static_cast<double>(ny); }
  point2 center(std::size_t i, std::size_t j) const;
  point2 center(std::size_t cell) const { return center(cell % nx, cell / nx); }
};

/// Row-major values over a grid.
struct surface {
  grid_spec grid;
  std::vector<double> values;
};

struct ensemble_grid {
  grid_spec grid;
  std::vector<std::vector<double>> realizations;  // R surfaces, each row-major
  std::vector<double> mean;
  std::vector<double> std;  // divisor R
  std::vector<double> p10;
  std::vector<double> p90;

  std::size_t count() const { return realizations.size(); }
};

/// Per-cell statistics of a realization stack.
struct cell_stats {
  double mean = 0.0;
  double std = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
};

/// mean = v0 + sum(v - v0) / R (identical draws give exactly v0), population std, and
/// percentiles by linear interpolation between order statistics at position p * (R - 1).
cell_stats summarize(std::vector<double> values);

double percentile(const std::vector<double>& sorted, double p);

/// Deterministic (noise-off) estimate at one location. Throws width_mismatch if the model was
/// not built for 2 + 3m inputs, not_enough_neighbors if m exceeds the sample count.
double estimate_point(const trained_model& trained, const spatial_index& index, point2 query);

surface estimate_grid(const trained_model& trained, const spatial_index& index,
                      const grid_spec& grid, std::size_t threads = 1);

/// R noise-on passes per cell. The noise for (realization r, cell c) comes from a stream keyed
/// by (seed, r, c), so the result does not depend on evaluation order or thread count.
ensemble_grid realize_grid(const trained_model& trained, const spatial_index& index,
                           const grid_spec& grid, std::size_t realizations, std::uint64_t seed,
                           std::size_t threads = 1);

/// Recomputes mean/std/p10/p90 from the stored realizations.
void refresh_statistics(ensemble_grid& ensemble);

struct surface_summary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t out_of_unit_range = 0;  // values outside [0, 1]; estimates are never clamped
};

surface_summary summarize_surface(const std::vector<double>& values);

}  // namespace nnn
