#include "nnn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "nnn/error.hpp"

namespace nnn {

double idw_estimate(const spatial_index& index, point2 query, const idw_params& params) {
  if (!(params.power > 0.0)) throw error(error_code::invalid_config, "IDW power must be > 0");
  const std::size_t n = index.size();
  if (n == 0) throw error(error_code::empty_samples, "IDW needs at least one sample");
  const std::size_t m = params.m == 0 ? n : params.m;
  const auto nbrs = index.knn(query, m);

  if (nbrs.distances.front() == 0.0) return index.samples()[nbrs.indices.front()].value;

  // Weights relative to the closest neighbor: (d_min / d)^p has the same ratios as d^-p but
  // cannot underflow to an all-zero weight vector for large p.
  const double d_min = nbrs.distances.front();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const double w = std::pow(d_min / nbrs.distances[k], params.power);
    num += w * index.samples()[nbrs.indices[k]].value;
    den += w;
  }
  return num / den;
}

double variogram_model::gamma(double h) const {
  if (h <= 0.0) return 0.0;
  return nugget + (sill - nugget) * (1.0 - std::exp(-3.0 * h / range));
}

long lag_bin_index(double distance, double max_lag, std::size_t lag_bins) {
  if (distance > max_lag || lag_bins == 0) return -1;
  const double width = max_lag / static_cast<double>(lag_bins);
  const auto k = static_cast<std::size_t>(distance / width);
  return static_cast<long>(std::min(k, lag_bins - 1));
}

namespace {

double half_diagonal(const sample_set& samples) {
  double x0 = samples[0].x, x1 = x0, y0 = samples[0].y, y1 = y0;
  for (const auto& s : samples) {
    x0 = std::min(x0, s.x);
    x1 = std::max(x1, s.x);
    y0 = std::min(y0, s.y);
    y1 = std::max(y1, s.y);
  }
  return 0.5 * std::hypot(x1 - x0, y1 - y0);
}

struct fit_point {
  double lag;
  double gamma;
};

struct linear_fit {
  double nugget;
  double partial_sill;
  double sse;
};

// For a fixed range the model is linear in (nugget, partial sill); solve the 2x2 normal
// equations, projecting onto nugget >= 0 and partial sill >= 0.
linear_fit fit_for_range(const std::vector<fit_point>& pts, double range) {
  const double n = static_cast<double>(pts.size());
  double sf = 0.0, sff = 0.0, sg = 0.0, sfg = 0.0;
  for (const auto& p : pts) {
    const double f = 1.0 - std::exp(-3.0 * p.lag / range);
    sf += f;
    sff += f * f;
    sg += p.gamma;
    sfg += f * p.gamma;
  }
  auto sse_of = [&](double nug, double c) {
    double s = 0.0;
    for (const auto& p : pts) {
      const double r = p.gamma - nug - c * (1.0 - std::exp(-3.0 * p.lag / range));
      s += r * r;
    }
    return s;
  };

  const double det = n * sff - sf * sf;
  if (det > 0.0) {
    const double nug = (sff * sg - sf * sfg) / det;
    const double c = (n * sfg - sf * sg) / det;
    if (nug >= 0.0 && c >= 0.0) return {nug, c, sse_of(nug, c)};
  }
  // Boundary candidates.
  linear_fit best{sg / n, 0.0, sse_of(sg / n, 0.0)};
  if (sff > 0.0) {
    const double c = std::max(0.0, sfg / sff);
    const double s = sse_of(0.0, c);
    if (s < best.sse) best = {0.0, c, s};
  }
  return best;
}

}  // namespace

std::vector<lag_bin> empirical_variogram(const sample_set& samples, std::size_t lag_bins) {
  if (lag_bins == 0) throw error(error_code::invalid_config, "need at least one lag bin");
  std::vector<lag_bin> bins(lag_bins);
  if (samples.size() < 2) return bins;
  const double max_lag = half_diagonal(samples);
  const double width = max_lag / static_cast<double>(lag_bins);
  for (std::size_t k = 0; k < lag_bins; ++k) {
    bins[k].lo = width * static_cast<double>(k);
    bins[k].hi = width * static_cast<double>(k + 1);
  }

  std::vector<double> lag_sum(lag_bins, 0.0), gamma_sum(lag_bins, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double d = std::sqrt(squared_distance(samples[i].position(), samples[j].position()));
      const long k = lag_bin_index(d, max_lag, lag_bins);
      if (k < 0) continue;
      const double diff = samples[i].value - samples[j].value;
      auto& bin = bins[static_cast<std::size_t>(k)];
      ++bin.pairs;
      lag_sum[static_cast<std::size_t>(k)] += d;
      gamma_sum[static_cast<std::size_t>(k)] += 0.5 * diff * diff;
    }
  }
  for (std::size_t k = 0; k < lag_bins; ++k) {
    if (bins[k].pairs == 0) continue;
    const double np = static_cast<double>(bins[k].pairs);
    bins[k].mean_lag = lag_sum[k] / np;
    bins[k].semivariance = gamma_sum[k] / np;
  }
  return bins;
}

variogram_model fit_variogram(const sample_set& samples, const variogram_settings& settings) {
  if (samples.size() < 10) {
    throw error(error_code::too_few_samples,
                "variogram fitting needs at least 10 samples, got " + std::to_string(samples.size()));
  }
  const double max_lag = half_diagonal(samples);

  double lo = samples[0].value, hi = lo;
  for (const auto& s : samples) {
    lo = std::min(lo, s.value);
    hi = std::max(hi, s.value);
  }
  if (hi == lo || max_lag == 0.0) {
    return {0.0, 0.0, max_lag > 0.0 ? max_lag : 1.0, true};
  }

  const auto bins = empirical_variogram(samples, settings.lag_bins);
  std::vector<fit_point> pts;
  for (const auto& b : bins) {
    if (b.pairs >= settings.min_pairs && b.pairs > 0) pts.push_back({b.mean_lag, b.semivariance});
  }
  if (pts.size() < 2) {
    // Not enough populated bins for a shape; fall back to every non-empty bin.
    pts.clear();
    for (const auto& b : bins) {
      if (b.pairs > 0) pts.push_back({b.mean_lag, b.semivariance});
    }
  }
  if (pts.size() < 2) {
    double g = 0.0;
    for (const auto& p : pts) g += p.gamma;
    g = pts.empty() ? 0.0 : g / static_cast<double>(pts.size());
    return {g, g, max_lag, true};
  }

  // Coarse log-spaced scan over the range, then golden-section refinement.
  const double r_lo = max_lag / 100.0;
  const double r_hi = max_lag * 10.0;
  constexpr int kScan = 400;
  auto range_at = [&](int k) {
    return r_lo * std::pow(r_hi / r_lo, static_cast<double>(k) / (kScan - 1));
  };
  int best_k = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kScan; ++k) {
    const double s = fit_for_range(pts, range_at(k)).sse;
    if (s < best_sse) {
      best_sse = s;
      best_k = k;
    }
  }
  double a = std::log(range_at(std::max(0, best_k - 1)));
  double b = std::log(range_at(std::min(kScan - 1, best_k + 1)));
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  auto sse_log = [&](double t) { return fit_for_range(pts, std::exp(t)).sse; };
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = sse_log(c), fd = sse_log(d);
  for (int it = 0; it < 80; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = sse_log(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = sse_log(d);
    }
  }
  double range = std::exp(0.5 * (a + b));
  auto fit = fit_for_range(pts, range);
  if (fit.sse > best_sse) {
    range = range_at(best_k);
    fit = fit_for_range(pts, range);
  }

  if (!(fit.partial_sill > 0.0)) return {fit.nugget, fit.nugget, range, true};
  return {fit.nugget, fit.nugget + fit.partial_sill, range, false};
}

kriging_result kriging_estimate(const spatial_index& index, point2 query,
                                const variogram_model& variogram, std::size_t m) {
  const auto nbrs = index.knn(query, m);
  const auto& samples = index.samples();
  const auto k = static_cast<Eigen::Index>(nbrs.size());

  if (variogram.degenerate) {
    // Pure nugget: every off-diagonal covariance vanishes and the weights are equal.
    kriging_result out;
    out.neighbors = nbrs.indices;
    out.weights.assign(nbrs.size(), 1.0 / static_cast<double>(nbrs.size()));
    for (std::size_t i = 0; i < nbrs.size(); ++i) out.value += out.weights[i] * samples[nbrs.indices[i]].value;
    out.lagrange = -variogram.sill / static_cast<double>(nbrs.size());
    out.variance = variogram.sill + variogram.sill / static_cast<double>(nbrs.size());
    return out;
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Eigen::VectorXd rhs(k + 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    const point2 pi = samples[nbrs.indices[static_cast<std::size_t>(i)]].position();
    for (Eigen::Index j = 0; j < k; ++j) {
      const point2 pj = samples[nbrs.indices[static_cast<std::size_t>(j)]].position();
      a(i, j) = variogram.covariance(std::sqrt(squared_distance(pi, pj)));
    }
    a(i, k) = 1.0;
    a(k, i) = 1.0;
    rhs[i] = variogram.covariance(nbrs.distances[static_cast<std::size_t>(i)]);
  }
  rhs[k] = 1.0;

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw error(error_code::singular_system,
                "ordinary kriging system over " + std::to_string(nbrs.size()) +
                    " neighbors is singular");
  }
  const Eigen::VectorXd solution = lu.solve(rhs);
  if (!solution.allFinite()) throw error(error_code::singular_system, "kriging solve produced non-finite weights");

  kriging_result out;
  out.neighbors = nbrs.indices;
  out.weights.resize(nbrs.size());
  double value = 0.0;
  double explained = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double w = solution[i];
    out.weights[static_cast<std::size_t>(i)] = w;
    value += w * samples[nbrs.indices[static_cast<std::size_t>(i)]].value;
    explained += w * rhs[i];
  }
  out.lagrange = solution[k];
  out.value = value;
  out.variance = std::max(0.0, variogram.covariance(0.0) - explained - out.lagrange);
  return out;
}

}  // namespace nnn
