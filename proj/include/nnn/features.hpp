#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "nnn/spatial_index.hpp"

namespace nnn {

struct neighbor_triple {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

/// One row of the nearest-neighbor feature matrix: the query location followed by its m
/// neighbors (ascending distance), flattened as qx, qy, x1, y1, v1, ..., xm, ym, vm.
struct feature_row {
  double qx = 0.0;
  double qy = 0.0;
  std::vector<neighbor_triple> neighbors;
  std::optional<double> target;

  std::size_t m() const { return neighbors.size(); }
  std::size_t width() const { return 2 + 3 * neighbors.size(); }
  std::vector<double> flatten() const;
};

constexpr std::size_t feature_width(std::size_t m) { return 2 + 3 * m; }

/// Row i describes sample i: its own coordinates, target = its value, and its m nearest other
/// samples. Throws not_enough_neighbors if m > N - 1.
std::vector<feature_row> build_training_matrix(const spatial_index& index, std::size_t m);

/// Row for an unknown location; neighbors are the m nearest samples with no exclusion.
feature_row build_estimation_row(point2 query, const spatial_index& index, std::size_t m);

/// Per-column min-max scaling to [0, 1]: normalized = (v - shift) * scale.
class normalizer {
public:
  struct affine {
    double shift = 0.0;
    double scale = 1.0;

    double apply(double v) const { return (v - shift) * scale; }
    double invert(double v) const { return v / scale + shift; }
  };

  normalizer() = default;
  normalizer(std::vector<affine> features, affine target);

  static normalizer identity(std::size_t width);

  std::size_t width() const { return features_.size(); }
  const std::vector<affine>& features() const { return features_; }
  const affine& target() const { return target_; }

  // Throws width_mismatch.
  std::vector<double> apply(const feature_row& row) const;
  std::vector<double> apply(std::span<const double> flat) const;
  std::vector<double> invert(std::span<const double> normalized) const;
  double apply_target(double value) const { return target_.apply(value); }
  double invert_target(double value) const { return target_.invert(value); }

private:
  std::vector<affine> features_;
  affine target_;
};

/// Fits min-max parameters per flattened column and for the target. Constant columns keep
/// scale 1 so they map to 0. Rows without a target leave the target transform as identity.
/// Throws empty_input or width_mismatch (rows of different widths).
normalizer fit_normalizer(std::span<const feature_row> rows);

/// Debug dump: header qx,qy,nx1,ny1,phi1,...,nxm,nym,phim,target (target empty when absent).
void write_matrix_csv(std::ostream& out, std::span<const feature_row> rows);

}  // namespace nnn
