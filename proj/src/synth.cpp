#include "nnn/synth.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nnn/error.hpp"

namespace nnn {

std::string_view to_string(nonlinearity kind) {
  return kind == nonlinearity::squashed ? "squashed" : "none";
}

nonlinearity parse_nonlinearity(std::string_view text) {
  if (text == "none") return nonlinearity::none;
  if (text == "squashed") return nonlinearity::squashed;
  throw error(error_code::invalid_config,
              "unknown nonlinearity '" + std::string(text) + "' (expected none or squashed)");
}

void field_spec::validate() const {
  if (!(std >= 0.0) || !std::isfinite(std)) throw error(error_code::invalid_config, "field std must be >= 0");
  if (!(range > 0.0) || !std::isfinite(range)) throw error(error_code::invalid_config, "field range must be > 0");
  if (!(mean > 0.0 && mean < 1.0)) throw error(error_code::invalid_config, "field mean must lie in (0, 1)");
  if (transform == nonlinearity::squashed && !(mean > kSquashLow && mean < kSquashHigh)) {
    throw error(error_code::invalid_config, "squashed fields need a mean inside (0.01, 0.40)");
  }
}

double squash(double value, double mean) {
  const double span = kSquashHigh - kSquashLow;
  const double p = (mean - kSquashLow) / span;
  const double gain = 1.0 / (span * p * (1.0 - p));
  const double t = std::log(p / (1.0 - p)) + gain * (value - mean);
  return kSquashLow + span / (1.0 + std::exp(-t));
}

surface generate_field(const field_spec& spec, const grid_spec& grid) {
  spec.validate();
  grid.validate();
  const std::size_t n = grid.cells();
  surface out{grid, std::vector<double>(n, spec.mean)};

  if (spec.std > 0.0) {
    const auto size = static_cast<Eigen::Index>(n);
    const double var = spec.std * spec.std;
    Eigen::MatrixXd cov(size, size);
    for (std::size_t i = 0; i < n; ++i) {
      const point2 pi = grid.center(i);
      for (std::size_t j = 0; j <= i; ++j) {
        const double h = std::sqrt(squared_distance(pi, grid.center(j)));
        const double c = var * std::exp(-3.0 * h / spec.range);
        cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
        cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
      }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      cov.diagonal().array() += 1e-10 * var;
      llt.compute(cov);
      if (llt.info() != Eigen::Success) {
        throw error(error_code::non_positive_definite,
                    "field covariance is not positive definite even with diagonal jitter");
      }
    }

    std::mt19937_64 engine(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(size);
    for (Eigen::Index i = 0; i < size; ++i) z[i] = normal(engine);
    const Eigen::VectorXd g = llt.matrixL() * z;
    for (std::size_t i = 0; i < n; ++i) out.values[i] += g[static_cast<Eigen::Index>(i)];
  }

  if (spec.transform == nonlinearity::squashed) {
    for (double& v : out.values) v = squash(v, spec.mean);
  }
  return out;
}

sample_set sample_wells(const surface& field, std::size_t n, std::uint64_t seed, double noise_std) {
  const std::size_t cells = field.grid.cells();
  if (n > cells) {
    throw error(error_code::too_many_wells, "requested " + std::to_string(n) + " wells from a grid of " +
                                                std::to_string(cells) + " cells");
  }
  if (!(noise_std >= 0.0)) throw error(error_code::invalid_config, "well noise must be >= 0");

  std::vector<std::size_t> cell_ids(cells);
  std::iota(cell_ids.begin(), cell_ids.end(), std::size_t{0});
  std::mt19937_64 engine(seed);
  // Partial Fisher-Yates: the first n slots become a uniform random selection.
  for (std::size_t k = 0; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, cells - 1);
    std::swap(cell_ids[k], cell_ids[pick(engine)]);
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<sample> wells(n);
  for (std::size_t k = 0; k < n; ++k) {
    const point2 p = field.grid.center(cell_ids[k]);
    double v = field.values[cell_ids[k]];
    if (noise_std > 0.0) v += noise_std * noise(engine);
    wells[k] = {k, p.x, p.y, v};
  }
  return sample_set(std::move(wells));
}

}  // namespace nnn
