#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "nnn/error.hpp"
#include "nnn/parallel.hpp"
#include "nnn/training.hpp"

using namespace nnn;

namespace {

sample_set field_samples(std::size_t n, double extent, std::uint64_t seed, auto&& phi) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(engine), y = u(engine);
    out.push_back({i, x, y, phi(x, y)});
  }
  return sample_set(std::move(out));
}

double linear_field(double x, double y) { return 0.1 + 0.002 * x + 0.001 * y; }

error_code code_of(auto&& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  FAIL("expected nnn::error");
  return error_code::invalid_config;
}

train_config quick_config(std::size_t m, std::uint64_t seed) {
  train_config c;
  c.m = m;
  c.seed = seed;
  c.max_epochs = 200;
  c.hidden = {8};
  return c;
}

}  // namespace

TEST_CASE("split sizes and determinism") {
  SUBCASE("100 rows at 0.85") {
    const auto s = split(100, 0.85, 1);
    CHECK(s.train.size() == 85);
    CHECK(s.validation.size() == 15);
  }
  SUBCASE("two rows clamp to one each") {
    const auto s = split(2, 0.85, 1);
    CHECK(s.train.size() == 1);
    CHECK(s.validation.size() == 1);
    CHECK(split(2, 0.01, 1).train.size() == 1);
  }
  SUBCASE("same seed, same split; partition of all ids") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto a = split(57, 0.8, seed);
      const auto b = split(57, 0.8, seed);
      CHECK(a.train == b.train);
      CHECK(a.validation == b.validation);
      std::vector<std::size_t> all = a.train;
      all.insert(all.end(), a.validation.begin(), a.validation.end());
      std::sort(all.begin(), all.end());
      for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    }
    CHECK(split(57, 0.8, 1).train != split(57, 0.8, 2).train);
  }
  SUBCASE("errors") {
    CHECK(code_of([] { split(1, 0.85, 0); }) == error_code::too_few_rows);
    CHECK(code_of([] { split(10, 1.0, 0); }) == error_code::invalid_config);
  }
}

TEST_CASE("average validation error") {
  // One-input linear model y = w*x + b over an identity normalizer with a single-column row.
  auto model = init_model(feature_width(0), {}, 0.0, 0);
  model.layers[0].weights.setZero();

  feature_row row;
  row.target = 0.2;
  const normalizer id = normalizer::identity(feature_width(0));

  SUBCASE("perfect prediction") {
    model.layers[0].bias[0] = 0.2;
    const std::vector<feature_row> rows{row};
    CHECK(average_validation_error(model, id, rows) == 0.0);
  }
  SUBCASE("0.21 against 0.2") {
    model.layers[0].bias[0] = 0.21;
    const std::vector<feature_row> rows{row};
    CHECK(average_validation_error(model, id, rows) == doctest::Approx(0.05).epsilon(1e-12));
  }
  SUBCASE("zero target") {
    row.target = 0.0;
    const std::vector<feature_row> rows{row};
    CHECK(code_of([&] { average_validation_error(model, id, rows); }) == error_code::zero_target);
  }
  SUBCASE("random model and rows match a direct recomputation") {
    std::mt19937_64 engine(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<std::size_t> hidden{5};
    for (int trial = 0; trial < 10; ++trial) {
      const auto net = init_model(feature_width(2), hidden, 0.0, engine());
      std::vector<feature_row> rows(7);
      for (auto& r : rows) {
        r.qx = u(engine);
        r.qy = u(engine);
        r.neighbors = {{u(engine), u(engine), u(engine)}, {u(engine), u(engine), u(engine)}};
        r.target = 0.05 + u(engine);
      }
      const auto norm = fit_normalizer(rows);
      double sum = 0.0;
      for (const auto& r : rows) {
        const double yhat = norm.invert_target(forward(net, norm.apply(r)));
        sum += std::abs(yhat - *r.target) / *r.target;
      }
      CHECK(average_validation_error(net, norm, rows) == doctest::Approx(sum / 7.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("config validation") {
  train_config c;
  CHECK_NOTHROW(c.validate());
  c.max_epochs = 0;
  CHECK(code_of([&] { c.validate(); }) == error_code::invalid_config);
  const auto samples = field_samples(30, 100, 1, [](double, double) { return 0.25; });
  CHECK(code_of([&] { train(samples, c); }) == error_code::invalid_config);

  train_config d;
  d.train_fraction = 0.0;
  CHECK_THROWS_AS(d.validate(), error);
  d = {};
  d.val_tolerance = 0.0;
  CHECK_THROWS_AS(d.validate(), error);
  d = {};
  d.learning_rate = -1.0;
  CHECK_THROWS_AS(d.validate(), error);
}

TEST_CASE("too few samples for m") {
  const auto samples = field_samples(16, 100, 2, linear_field);
  train_config c;
  c.m = 15;
  CHECK(code_of([&] { train(samples, c); }) == error_code::not_enough_neighbors);
}

TEST_CASE("constant field is learned to tolerance") {
  const auto samples = field_samples(30, 100, 3, [](double, double) { return 0.25; });
  train_config c;
  c.m = 5;
  c.seed = 7;
  const auto result = train(samples, c);
  CHECK(result.report.reason == stop_reason::tolerance_met);
  CHECK(result.report.best_val_error <= c.val_tolerance);

  const spatial_index idx(samples);
  double worst = 0.0;
  for (const auto& s : samples) {
    const auto row = build_estimation_row(s.position(), idx, 5);
    const double v = result.trained.norm.invert_target(forward(result.trained.model, result.trained.norm.apply(row)));
    worst = std::max(worst, std::abs(v - 0.25) / 0.25);
  }
  CHECK(worst <= 0.005);
}

TEST_CASE("linear field reaches the tolerance with the default configuration") {
  const auto samples = field_samples(100, 100, 4, linear_field);
  train_config c;
  c.seed = 1;
  const auto result = train(samples, c);
  CAPTURE(result.report.best_val_error);
  CHECK(result.report.best_val_error <= 0.005);
  CHECK(result.report.reason == stop_reason::tolerance_met);
}

TEST_CASE("report invariants") {
  const auto samples = field_samples(60, 100, 5, linear_field);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto c = quick_config(6, seed);
    c.eval_every = 7;
    c.max_epochs = 150;
    const auto result = train(samples, c);
    const auto& r = result.report;

    CHECK(r.n_train + r.n_validation == 60);
    CHECK(r.n_train == 51);
    CHECK(r.loss_history.size() == r.stopped_epoch);

    for (std::size_t k = 0; k < r.val_history.size(); ++k) {
      const std::size_t e = r.val_history[k].epoch;
      CHECK((e % c.eval_every == 0 || e == c.max_epochs));
    }
    if (r.reason == stop_reason::max_epochs) CHECK(r.val_history.back().epoch == c.max_epochs);

    double lowest = r.val_history.front().error;
    for (const auto& v : r.val_history) lowest = std::min(lowest, v.error);
    CHECK(r.best_val_error == lowest);
    const auto best = std::find_if(r.val_history.begin(), r.val_history.end(),
                                   [&](const validation_point& v) { return v.error == lowest; });
    CHECK(best->epoch == r.best_model_epoch);
    CHECK(r.loss_history[r.best_model_epoch - 1] <= r.initial_loss);
  }
}

TEST_CASE("returned snapshot reproduces the reported validation error") {
  const auto samples = field_samples(50, 100, 6, linear_field);
  const auto c = quick_config(5, 3);
  const auto result = train(samples, c);

  const spatial_index idx(samples);
  const auto rows = build_training_matrix(idx, c.m);
  const auto parts = split(samples.size(), c.train_fraction, mix_seed(c.seed, 1));
  std::vector<feature_row> val;
  for (std::size_t id : parts.validation) val.push_back(rows[id]);
  CHECK(average_validation_error(result.trained.model, result.trained.norm, val) == result.report.best_val_error);
}

TEST_CASE("training is bit-reproducible") {
  const auto samples = field_samples(40, 100, 7, linear_field);
  for (double sigma : {0.0, 0.05}) {
    auto c = quick_config(4, 9);
    c.noise_sigma = sigma;
    c.batch_size = sigma > 0 ? 8 : 0;
    const auto a = train(samples, c);
    const auto b = train(samples, c);
    CHECK(a.report.loss_history == b.report.loss_history);
    for (std::size_t k = 0; k < a.trained.model.layers.size(); ++k) {
      CHECK(a.trained.model.layers[k].weights == b.trained.model.layers[k].weights);
      CHECK(a.trained.model.layers[k].bias == b.trained.model.layers[k].bias);
    }
  }
}

TEST_CASE("normalizer is fitted on training rows only") {
  // The validation sample carries an extreme value; it must not stretch the target range.
  std::vector<sample> pts;
  for (std::size_t i = 0; i < 20; ++i) pts.push_back({i, double(i), double(i * i % 7), 0.2});
  const sample_set samples(pts);
  auto c = quick_config(2, 0);
  c.max_epochs = 1;
  const auto parts = split(20, c.train_fraction, mix_seed(c.seed, 1));
  auto modified = pts;
  modified[parts.validation.front()].value = 0.9;
  const auto result = train(sample_set(modified), c);
  CHECK(result.trained.norm.target().shift == 0.2);
  CHECK(result.trained.norm.target().scale == 1.0);
}

TEST_CASE("cross-validation partition") {
  const auto samples = field_samples(100, 100, 8, [](double, double) { return 0.3; });
  train_config c;
  c.seed = 4;
  const auto cv = cross_validate(samples, c);
  REQUIRE(cv.folds.size() == kCvFolds);
  REQUIRE(cv.fold_errors.size() == kCvFolds);
  std::vector<std::size_t> all;
  for (const auto& f : cv.folds) {
    CHECK(f.size() == 10);
    all.insert(all.end(), f.begin(), f.end());
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  CHECK(cv.mean < 0.005);

  double mean = 0.0;
  for (double e : cv.fold_errors) mean += e / 10.0;
  double var = 0.0;
  for (double e : cv.fold_errors) var += (e - mean) * (e - mean) / 10.0;
  CHECK(cv.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(cv.stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
}

TEST_CASE("cross-validation with uneven folds and threads") {
  const auto samples = field_samples(47, 100, 9, linear_field);
  auto c = quick_config(3, 5);
  c.max_epochs = 30;
  const auto one = cross_validate(samples, c, 1);
  const auto four = cross_validate(samples, c, 4);
  CHECK(one.fold_errors == four.fold_errors);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& f : one.folds) {
    CHECK((f.size() == 4 || f.size() == 5));
    total += f.size();
    seen.insert(f.begin(), f.end());
  }
  CHECK(total == 47);
  CHECK(seen.size() == 47);
}

TEST_CASE("cross-validation needs enough rows") {
  const auto few = field_samples(9, 100, 10, linear_field);
  CHECK(code_of([&] { cross_validate(few, quick_config(1, 0)); }) == error_code::too_few_rows);
  const auto tight = field_samples(20, 100, 11, linear_field);
  CHECK(code_of([&] { cross_validate(tight, quick_config(17, 0)); }) == error_code::too_few_rows);
}
