#include "nnn/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nnn/error.hpp"
#include "nnn/parallel.hpp"

namespace nnn {

void grid_spec::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw error(error_code::invalid_config, "grid extents must satisfy x_max > x_min and y_max > y_min");
  }
  if (nx < 1 || ny < 1) throw error(error_code::invalid_config, "grid needs nx, ny >= 1");
}

point2 grid_spec::center(std::size_t i, std::size_t j) const {
  return {x_min + (static_cast<double>(i) + 0.5) * dx(), y_min + (static_cast<double>(j) + 0.5) * dy()};
}

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

cell_stats summarize(std::vector<double> values) {
  cell_stats s;
  if (values.empty()) return s;
  const double r = static_cast<double>(values.size());
  const double anchor = values.front();
  double shifted = 0.0;
  for (double v : values) shifted += v - anchor;
  s.mean = anchor + shifted / r;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / r);
  std::sort(values.begin(), values.end());
  s.p10 = percentile(values, 0.10);
  s.p90 = percentile(values, 0.90);
  return s;
}

namespace {

void check_model(const trained_model& trained) {
  if (trained.model.input_width() != feature_width(trained.m)) {
    throw error(error_code::width_mismatch,
                "model input width " + std::to_string(trained.model.input_width()) +
                    " does not match 2 + 3m = " + std::to_string(feature_width(trained.m)));
  }
}

}  // namespace

double estimate_point(const trained_model& trained, const spatial_index& index, point2 query) {
  check_model(trained);
  const auto row = build_estimation_row(query, index, trained.m);
  return trained.norm.invert_target(forward(trained.model, trained.norm.apply(row)));
}

surface estimate_grid(const trained_model& trained, const spatial_index& index,
                      const grid_spec& grid, std::size_t threads) {
  grid.validate();
  check_model(trained);
  surface out{grid, std::vector<double>(grid.cells())};
  parallel_for(grid.cells(), threads, [&](std::size_t cell) {
    out.values[cell] = estimate_point(trained, index, grid.center(cell));
  });
  return out;
}

void refresh_statistics(ensemble_grid& ensemble) {
  const std::size_t cells = ensemble.grid.cells();
  ensemble.mean.assign(cells, 0.0);
  ensemble.std.assign(cells, 0.0);
  ensemble.p10.assign(cells, 0.0);
  ensemble.p90.assign(cells, 0.0);
  std::vector<double> stack(ensemble.count());
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t r = 0; r < ensemble.count(); ++r) stack[r] = ensemble.realizations[r][c];
    const auto s = summarize(stack);
    ensemble.mean[c] = s.mean;
    ensemble.std[c] = s.std;
    ensemble.p10[c] = s.p10;
    ensemble.p90[c] = s.p90;
  }
}

ensemble_grid realize_grid(const trained_model& trained, const spatial_index& index,
                           const grid_spec& grid, std::size_t realizations, std::uint64_t seed,
                           std::size_t threads) {
  grid.validate();
  check_model(trained);
  if (realizations < 1) throw error(error_code::invalid_config, "realization count must be at least 1");

  const std::size_t cells = grid.cells();
  ensemble_grid out;
  out.grid = grid;
  out.realizations.assign(realizations, std::vector<double>(cells));

  parallel_for(cells, threads, [&](std::size_t cell) {
    const auto row = build_estimation_row(grid.center(cell), index, trained.m);
    const auto input = trained.norm.apply(row);
    for (std::size_t r = 0; r < realizations; ++r) {
      noise_stream noise(mix_seed(mix_seed(seed, r), cell));
      out.realizations[r][cell] = trained.norm.invert_target(forward(trained.model, input, &noise));
    }
  });
  refresh_statistics(out);
  return out;
}

surface_summary summarize_surface(const std::vector<double>& values) {
  surface_summary s;
  if (values.empty()) return s;
  s.min = s.max = values.front();
  double sum = 0.0;
  for (double v : values) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
    if (v < 0.0 || v > 1.0) ++s.out_of_unit_range;
  }
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

}  // namespace nnn
