#include "nnn/features.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "nnn/error.hpp"
#include "nnn/format.hpp"

namespace nnn {

std::vector<double> feature_row::flatten() const {
  std::vector<double> out;
  out.reserve(width());
  out.push_back(qx);
  out.push_back(qy);
  for (const auto& nb : neighbors) {
    out.push_back(nb.x);
    out.push_back(nb.y);
    out.push_back(nb.value);
  }
  return out;
}

namespace {

feature_row make_row(point2 query, const spatial_index& index, const neighbor_list& nbrs) {
  feature_row row;
  row.qx = query.x;
  row.qy = query.y;
  row.neighbors.reserve(nbrs.size());
  for (std::size_t id : nbrs.indices) {
    const auto& s = index.samples()[id];
    row.neighbors.push_back({s.x, s.y, s.value});
  }
  return row;
}

}  // namespace

std::vector<feature_row> build_training_matrix(const spatial_index& index, std::size_t m) {
  const auto& samples = index.samples();
  std::vector<feature_row> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) {
    auto row = make_row(s.position(), index, index.knn(s.position(), m, s.id));
    row.target = s.value;
    rows.push_back(std::move(row));
  }
  return rows;
}

feature_row build_estimation_row(point2 query, const spatial_index& index, std::size_t m) {
  return make_row(query, index, index.knn(query, m));
}

normalizer::normalizer(std::vector<affine> features, affine target)
    : features_(std::move(features)), target_(target) {
  for (const auto& a : features_) {
    if (a.scale == 0.0) throw error(error_code::invalid_config, "normalizer scale must be nonzero");
  }
  if (target_.scale == 0.0) throw error(error_code::invalid_config, "normalizer scale must be nonzero");
}

normalizer normalizer::identity(std::size_t width) {
  return normalizer(std::vector<affine>(width), affine{});
}

std::vector<double> normalizer::apply(const feature_row& row) const {
  return apply(row.flatten());
}

std::vector<double> normalizer::apply(std::span<const double> flat) const {
  if (flat.size() != features_.size()) {
    throw error(error_code::width_mismatch, "row width " + std::to_string(flat.size()) +
                                                " does not match normalizer width " +
                                                std::to_string(features_.size()));
  }
  std::vector<double> out(flat.size());
  for (std::size_t c = 0; c < flat.size(); ++c) out[c] = features_[c].apply(flat[c]);
  return out;
}

std::vector<double> normalizer::invert(std::span<const double> normalized) const {
  if (normalized.size() != features_.size()) {
    throw error(error_code::width_mismatch, "row width " + std::to_string(normalized.size()) +
                                                " does not match normalizer width " +
                                                std::to_string(features_.size()));
  }
  std::vector<double> out(normalized.size());
  for (std::size_t c = 0; c < normalized.size(); ++c) out[c] = features_[c].invert(normalized[c]);
  return out;
}

namespace {

normalizer::affine min_max(double lo, double hi) {
  if (hi > lo) return {lo, 1.0 / (hi - lo)};
  return {lo, 1.0};
}

}  // namespace

normalizer fit_normalizer(std::span<const feature_row> rows) {
  if (rows.empty()) throw error(error_code::empty_input, "cannot fit a normalizer on zero rows");

  const std::size_t width = rows.front().width();
  std::vector<double> lo(width), hi(width);
  bool have_target = false;
  double tlo = 0.0, thi = 0.0;

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto flat = rows[r].flatten();
    if (flat.size() != width) {
      throw error(error_code::width_mismatch, "row " + std::to_string(r) + " has width " +
                                                  std::to_string(flat.size()) + ", expected " +
                                                  std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (r == 0) {
        lo[c] = hi[c] = flat[c];
      } else {
        lo[c] = std::min(lo[c], flat[c]);
        hi[c] = std::max(hi[c], flat[c]);
      }
    }
    if (rows[r].target) {
      const double t = *rows[r].target;
      if (!have_target) {
        tlo = thi = t;
        have_target = true;
      } else {
        tlo = std::min(tlo, t);
        thi = std::max(thi, t);
      }
    }
  }

  std::vector<normalizer::affine> features(width);
  for (std::size_t c = 0; c < width; ++c) features[c] = min_max(lo[c], hi[c]);
  const normalizer::affine target = have_target ? min_max(tlo, thi) : normalizer::affine{};
  return normalizer(std::move(features), target);
}

void write_matrix_csv(std::ostream& out, std::span<const feature_row> rows) {
  const std::size_t m = rows.empty() ? 0 : rows.front().m();
  out << "qx,qy";
  for (std::size_t j = 1; j <= m; ++j) out << ",nx" << j << ",ny" << j << ",phi" << j;
  out << ",target\n";
  for (const auto& row : rows) {
    for (double v : row.flatten()) out << format_double(v) << ',';
    if (row.target) out << format_double(*row.target);
    out << '\n';
  }
}

}  // namespace nnn
