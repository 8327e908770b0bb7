#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "nnn/baselines.hpp"
#include "nnn/error.hpp"
#include "nnn/synth.hpp"

using namespace nnn;

namespace {

sample_set random_samples(std::size_t n, std::uint64_t seed, double extent = 100.0) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> u(0.0, extent);
  std::uniform_real_distribution<double> phi(0.05, 0.35);
  std::vector<sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({i, u(engine), u(engine), phi(engine)});
  return sample_set(std::move(out));
}

// Gaussian elimination with partial pivoting on a dense augmented system.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

double exp_cov(double h, double nugget, double sill, double range) {
  if (h == 0.0) return sill;
  return (sill - nugget) * std::exp(-3.0 * h / range);
}

}  // namespace

TEST_CASE("IDW examples") {
  const spatial_index two(sample_set({{0, 0, 0, 0.1}, {1, 2, 0, 0.3}}));

  SUBCASE("query at a sample") {
    CHECK(idw_estimate(two, {2, 0}, {}) == 0.3);
    CHECK(idw_estimate(two, {0, 0}, {3.0, 1}) == 0.1);
  }
  SUBCASE("equidistant pair") {
    CHECK(idw_estimate(two, {1, 0}, {2.0, 0}) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(idw_estimate(two, {1, 7}, {2.0, 0}) == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("three hand-placed samples") {
    const spatial_index three(sample_set({{0, 0, 0, 0.1}, {1, 3, 0, 0.2}, {2, 0, 4, 0.4}}));
    // From (1, 1): d^2 = 2, 5, 10.
    const double w0 = 1.0 / 2, w1 = 1.0 / 5, w2 = 1.0 / 10;
    const double expected = (w0 * 0.1 + w1 * 0.2 + w2 * 0.4) / (w0 + w1 + w2);
    CHECK(idw_estimate(three, {1, 1}, {2.0, 0}) == doctest::Approx(expected).epsilon(1e-14));
    // Nearest two only.
    const double e2 = (w0 * 0.1 + w1 * 0.2) / (w0 + w1);
    CHECK(idw_estimate(three, {1, 1}, {2.0, 2}) == doctest::Approx(e2).epsilon(1e-14));
  }
  SUBCASE("invalid power") {
    CHECK_THROWS_AS(idw_estimate(two, {1, 1}, {0.0, 0}), error);
    CHECK_THROWS_AS(idw_estimate(two, {1, 1}, {-1.0, 0}), error);
  }
}

TEST_CASE("IDW stays within the range of contributing values") {
  std::mt19937_64 engine(1);
  std::uniform_real_distribution<double> u(-10.0, 110.0);
  std::uniform_real_distribution<double> pw(0.2, 8.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto set = random_samples(40, engine());
    const spatial_index idx(set);
    for (int q = 0; q < 20; ++q) {
      const point2 p{u(engine), u(engine)};
      const idw_params params{pw(engine), static_cast<std::size_t>(1 + q % 12)};
      const auto nb = idx.knn(p, params.m);
      double lo = 1.0, hi = 0.0;
      for (std::size_t id : nb.indices) {
        lo = std::min(lo, set[id].value);
        hi = std::max(hi, set[id].value);
      }
      const double v = idw_estimate(idx, p, params);
      CHECK(v >= lo - 1e-15);
      CHECK(v <= hi + 1e-15);
    }
  }
}

TEST_CASE("IDW with a large power approaches the nearest neighbor") {
  std::mt19937_64 engine(2);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  const auto set = random_samples(60, 3);
  const spatial_index idx(set);
  for (int q = 0; q < 100; ++q) {
    const point2 p{u(engine), u(engine)};
    const auto nb = idx.knn(p, 2);
    if (nb.distances[1] < 1.2 * nb.distances[0]) continue;  // near-ties are not generic
    CHECK(idw_estimate(idx, p, {50.0, 0}) == doctest::Approx(set[nb.indices[0]].value).epsilon(1e-3));
  }
}

TEST_CASE("variogram model") {
  const variogram_model v{0.1, 1.0, 30.0, false};
  CHECK(v.gamma(0.0) == 0.0);
  CHECK(v.gamma(1e-9) == doctest::Approx(0.1));
  CHECK(v.gamma(30.0) == doctest::Approx(0.1 + 0.9 * (1.0 - std::exp(-3.0))));
  double last = 0.0;
  for (double h = 0.0; h < 200.0; h += 0.5) {
    CHECK(v.gamma(h) >= last);
    last = v.gamma(h);
  }
  CHECK(v.covariance(0.0) == 1.0);
}

TEST_CASE("lag binning partitions pairs") {
  const auto set = random_samples(80, 4);
  const auto bins = empirical_variogram(set, 12);
  REQUIRE(bins.size() == 12);

  double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
  for (const auto& s : set) {
    x0 = std::min(x0, s.x);
    x1 = std::max(x1, s.x);
    y0 = std::min(y0, s.y);
    y1 = std::max(y1, s.y);
  }
  const double max_lag = 0.5 * std::hypot(x1 - x0, y1 - y0);

  std::vector<std::size_t> counts(12, 0);
  std::vector<double> gsum(12, 0.0);
  std::size_t beyond = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      const double d = std::hypot(set[i].x - set[j].x, set[i].y - set[j].y);
      const long k = lag_bin_index(d, max_lag, 12);
      if (d > max_lag) {
        CHECK(k == -1);
        ++beyond;
        continue;
      }
      REQUIRE(k >= 0);
      REQUIRE(k < 12);
      // The pair falls inside exactly one bin's half-open interval (the last bin is closed).
      std::size_t hits = 0;
      for (std::size_t b = 0; b < 12; ++b) {
        const bool inside = d >= bins[b].lo && (d < bins[b].hi || (b == 11 && d <= bins[b].hi));
        if (inside) ++hits;
      }
      CHECK(hits == 1);
      ++counts[static_cast<std::size_t>(k)];
      const double diff = set[i].value - set[j].value;
      gsum[static_cast<std::size_t>(k)] += 0.5 * diff * diff;
    }
  }
  std::size_t total = beyond;
  for (std::size_t b = 0; b < 12; ++b) {
    CHECK(bins[b].pairs == counts[b]);
    total += counts[b];
    if (counts[b] > 0) CHECK(bins[b].semivariance == doctest::Approx(gsum[b] / counts[b]).epsilon(1e-12));
  }
  CHECK(total == set.size() * (set.size() - 1) / 2);
  CHECK(lag_bin_index(max_lag, max_lag, 12) == 11);
  CHECK(lag_bin_index(0.0, max_lag, 12) == 0);
}

TEST_CASE("variogram fitting") {
  SUBCASE("constant field is degenerate") {
    std::vector<sample> pts;
    for (std::size_t i = 0; i < 30; ++i) pts.push_back({i, double(i % 6) * 10, double(i / 6) * 10, 0.2});
    const auto v = fit_variogram(sample_set(pts));
    CHECK(v.degenerate);
    CHECK(std::abs(v.sill - v.nugget) < 1e-15);
  }
  SUBCASE("too few samples") {
    CHECK_THROWS_AS(fit_variogram(random_samples(9, 1)), error);
  }
  SUBCASE("fitted model is a least-squares optimum over the kept bins") {
    const auto set = random_samples(120, 5);
    const auto v = fit_variogram(set);
    REQUIRE_FALSE(v.degenerate);
    CHECK(v.nugget >= 0.0);
    CHECK(v.sill > v.nugget);
    const auto bins = empirical_variogram(set, 12);
    auto sse = [&](const variogram_model& m) {
      double s = 0.0;
      for (const auto& b : bins) {
        if (b.pairs < 5) continue;
        const double r = b.semivariance - m.gamma(b.mean_lag);
        s += r * r;
      }
      return s;
    };
    const double best = sse(v);
    for (double f : {0.9, 0.97, 1.03, 1.1}) {
      CHECK(best <= sse({v.nugget, v.sill, v.range * f, false}) * (1 + 1e-9));
      CHECK(best <= sse({v.nugget, v.nugget + (v.sill - v.nugget) * f, v.range, false}) * (1 + 1e-9));
      if (v.nugget > 0) CHECK(best <= sse({v.nugget * f, v.sill, v.range, false}) * (1 + 1e-9));
    }
  }
}

TEST_CASE("fitted range recovers the generating range on average") {
  const double true_range = 250.0;
  const grid_spec grid{0, 1000, 0, 1000, 30, 30};
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    field_spec spec;
    spec.mean = 0.2;
    spec.std = 0.03;
    spec.range = true_range;
    spec.transform = nonlinearity::none;
    spec.seed = seed;
    const auto field = generate_field(spec, grid);
    const auto wells = sample_wells(field, 200, seed + 1000);
    sum += fit_variogram(wells).range;
  }
  const double mean = sum / 20.0;
  CAPTURE(mean);
  CHECK(mean >= 0.5 * true_range);
  CHECK(mean <= 1.5 * true_range);
}

TEST_CASE("kriging examples") {
  const variogram_model v{0.0, 0.01, 40.0, false};
  const auto set = random_samples(50, 6);
  const spatial_index idx(set);

  SUBCASE("exact at samples with zero nugget") {
    for (const auto& s : set) {
      const auto r = kriging_estimate(idx, s.position(), v, 8);
      CHECK(std::abs(r.value - s.value) < 1e-8);
      CHECK(r.variance < 1e-8);
    }
  }
  SUBCASE("single neighbor") {
    for (const point2 q : {point2{3, 3}, point2{77, 12}, point2{-50, 200}}) {
      const auto r = kriging_estimate(idx, q, v, 1);
      CHECK(r.weights == std::vector<double>{1.0});
      CHECK(r.value == set[idx.knn(q, 1).indices[0]].value);
    }
  }
  SUBCASE("weights sum to one") {
    std::mt19937_64 engine(7);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    const variogram_model nug{0.002, 0.01, 25.0, false};
    for (int q = 0; q < 100; ++q) {
      const auto r = kriging_estimate(idx, {u(engine), u(engine)}, q % 2 ? v : nug, 15);
      double total = 0.0;
      for (double w : r.weights) total += w;
      CHECK(std::abs(total - 1.0) < 1e-10);
      CHECK(r.variance >= 0.0);
    }
  }
  SUBCASE("three points against an independent dense solve") {
    const spatial_index three(sample_set({{0, 0, 0, 0.1}, {1, 10, 0, 0.2}, {2, 0, 20, 0.3}}));
    const variogram_model w{0.001, 0.01, 30.0, false};
    const point2 q{4, 5};
    const double px[] = {0, 10, 0}, py[] = {0, 0, 20};
    std::vector<std::vector<double>> a(4, std::vector<double>(4, 0.0));
    std::vector<double> b(4, 1.0);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) a[i][j] = exp_cov(std::hypot(px[i] - px[j], py[i] - py[j]), 0.001, 0.01, 30.0);
      a[i][3] = a[3][i] = 1.0;
      b[i] = exp_cov(std::hypot(px[i] - q.x, py[i] - q.y), 0.001, 0.01, 30.0);
    }
    const auto x = solve_dense(a, b);

    const auto r = kriging_estimate(three, q, w, 3);
    // Neighbor order is by distance from q: (0,0) d=6.4, (10,0) d=7.8, (0,20) d=15.5.
    REQUIRE(r.neighbors == std::vector<std::size_t>{0, 1, 2});
    for (int i = 0; i < 3; ++i) CHECK(r.weights[i] == doctest::Approx(x[i]).epsilon(1e-12));
    CHECK(r.lagrange == doctest::Approx(x[3]).epsilon(1e-10));
    CHECK(r.value == doctest::Approx(0.1 * x[0] + 0.2 * x[1] + 0.3 * x[2]).epsilon(1e-12));
    const double var = 0.01 - (x[0] * b[0] + x[1] * b[1] + x[2] * b[2]) - x[3];
    CHECK(r.variance == doctest::Approx(var).epsilon(1e-10));
  }
  SUBCASE("degenerate variogram gives equal weights") {
    const variogram_model flat{0.0, 0.0, 1.0, true};
    const auto r = kriging_estimate(idx, {50, 50}, flat, 4);
    const auto nb = idx.knn({50, 50}, 4);
    double mean = 0.0;
    for (std::size_t id : nb.indices) mean += set[id].value / 4.0;
    CHECK(r.weights == std::vector<double>(4, 0.25));
    CHECK(r.value == doctest::Approx(mean).epsilon(1e-14));
    CHECK(r.variance == 0.0);

    // The same limit reached through the general solver with a tiny pure-nugget sill.
    const variogram_model tiny{1e-6, 1e-6, 1.0, false};
    const auto t = kriging_estimate(idx, {50, 50}, tiny, 4);
    for (double w : t.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(t.variance == doctest::Approx(1e-6 * 1.25).epsilon(1e-9));
  }
  SUBCASE("an all-zero covariance is reported as singular") {
    const variogram_model zero{0.0, 0.0, 1.0, false};
    try {
      kriging_estimate(idx, {50, 50}, zero, 4);
      FAIL("expected singular_system");
    } catch (const error& e) {
      CHECK(e.code() == error_code::singular_system);
    }
  }
}
