#include "nnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "nnn/error.hpp"
#include "nnn/parallel.hpp"

namespace nnn {

namespace {

// Sub-stream ids for seeds derived from train_config::seed.
enum : std::uint64_t {
  kSplitStream = 1,
  kInitStream = 2,
  kNoiseStream = 3,
  kShuffleStream = 4,
  kFoldStream = 5,
  kFoldTrainStream = 100,
};

void require(bool ok, const std::string& what) {
  if (!ok) throw error(error_code::invalid_config, what);
}

}  // namespace

void train_config::validate() const {
  require(m >= 1, "m must be at least 1");
  require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must lie in (0, 1)");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
  require(max_epochs >= 1, "max_epochs must be at least 1");
  require(val_tolerance > 0.0, "val_tolerance must be > 0");
  require(eval_every >= 1, "eval_every must be at least 1");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise_sigma must be >= 0");
  for (std::size_t w : hidden) require(w >= 1, "hidden widths must be at least 1");
}

std::string_view to_string(stop_reason reason) {
  return reason == stop_reason::tolerance_met ? "tolerance_met" : "max_epochs";
}

split_indices split(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n < 2) throw error(error_code::too_few_rows, "need at least 2 rows to split, got " + std::to_string(n));
  require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must lie in (0, 1)");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 engine(seed);
  std::shuffle(perm.begin(), perm.end(), engine);

  const auto wanted = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  const std::size_t n_train = std::clamp<std::size_t>(wanted, 1, n - 1);

  split_indices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

double average_validation_error(const mlp_model& model, const normalizer& norm,
                                std::span<const feature_row> rows) {
  if (rows.empty()) throw error(error_code::empty_input, "no validation rows");
  double total = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (!row.target) throw error(error_code::empty_input, "validation row " + std::to_string(r) + " has no target");
    const double target = *row.target;
    if (target == 0.0) {
      throw error(error_code::zero_target,
                  "validation row " + std::to_string(r) + " has target 0; relative error is undefined");
    }
    const double predicted = norm.invert_target(forward(model, norm.apply(row)));
    total += std::abs(predicted - target) / std::abs(target);
  }
  return total / static_cast<double>(rows.size());
}

batch make_batch(const normalizer& norm, std::span<const feature_row> rows) {
  batch b;
  b.inputs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(norm.width()));
  b.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].target) throw error(error_code::empty_input, "training row " + std::to_string(r) + " has no target");
    const auto flat = norm.apply(rows[r]);
    for (std::size_t c = 0; c < flat.size(); ++c) b.inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[c];
    b.targets[static_cast<Eigen::Index>(r)] = norm.apply_target(*rows[r].target);
  }
  return b;
}

namespace {

batch select_rows(const batch& all, std::span<const std::size_t> ids) {
  batch b;
  b.inputs.resize(static_cast<Eigen::Index>(ids.size()), all.inputs.cols());
  b.targets.resize(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(ids[k]);
    b.inputs.row(static_cast<Eigen::Index>(k)) = all.inputs.row(src);
    b.targets[static_cast<Eigen::Index>(k)] = all.targets[src];
  }
  return b;
}

template <class T>
std::vector<T> pick(const std::vector<T>& items, std::span<const std::size_t> ids) {
  std::vector<T> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(items[id]);
  return out;
}

train_result run_training(const sample_set& samples, const train_config& config) {
  const std::size_t n = samples.size();
  if (n < config.m + 2) {
    throw error(error_code::not_enough_neighbors,
                "training with m=" + std::to_string(config.m) + " needs at least " +
                    std::to_string(config.m + 2) + " samples, got " + std::to_string(n));
  }

  const spatial_index index(samples);
  const auto rows = build_training_matrix(index, config.m);
  const auto parts = split(n, config.train_fraction, mix_seed(config.seed, kSplitStream));
  const auto train_rows = pick(rows, parts.train);
  const auto val_rows = pick(rows, parts.validation);
  for (const auto& row : val_rows) {
    if (*row.target == 0.0) {
      throw error(error_code::zero_target, "a validation sample has value 0; relative error is undefined");
    }
  }

  train_result result;
  auto& report = result.report;
  report.n_train = train_rows.size();
  report.n_validation = val_rows.size();

  const normalizer norm = fit_normalizer(train_rows);
  const batch full = make_batch(norm, train_rows);

  mlp_model model = init_model(feature_width(config.m), config.hidden, config.noise_sigma,
                               mix_seed(config.seed, kInitStream));
  noise_stream noise(mix_seed(config.seed, kNoiseStream));
  std::mt19937_64 shuffler(mix_seed(config.seed, kShuffleStream));

  report.initial_loss = loss(model, full);
  report.loss_history.reserve(config.max_epochs);

  const std::size_t n_train = train_rows.size();
  const bool full_batch = config.batch_size == 0 || config.batch_size >= n_train;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});

  mlp_model best = model;
  double best_error = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (full_batch) {
      sgd_step(model, backward(model, full, &noise), config.learning_rate);
    } else {
      std::shuffle(order.begin(), order.end(), shuffler);
      for (std::size_t start = 0; start < n_train; start += config.batch_size) {
        const std::size_t stop = std::min(n_train, start + config.batch_size);
        const auto mini = select_rows(full, std::span(order).subspan(start, stop - start));
        sgd_step(model, backward(model, mini, &noise), config.learning_rate);
      }
    }
    report.loss_history.push_back(loss(model, full));

    if (epoch % config.eval_every == 0 || epoch == config.max_epochs) {
      const double err = average_validation_error(model, norm, val_rows);
      report.val_history.push_back({epoch, err});
      if (err < best_error) {
        best_error = err;
        best = model;
        report.best_model_epoch = epoch;
      }
      report.stopped_epoch = epoch;
      if (err <= config.val_tolerance) {
        report.reason = stop_reason::tolerance_met;
        break;
      }
    }
  }

  report.best_val_error = best_error;
  result.trained = {std::move(best), norm, config.m};
  return result;
}

}  // namespace

train_result train(const sample_set& samples, const train_config& config) {
  config.validate();
  try {
    return run_training(samples, config);
  } catch (const error& e) {
    if (e.code() == error_code::non_finite_activation) {
      throw error(error_code::divergence, std::string("training diverged: ") + e.what());
    }
    throw;
  }
}

cv_report cross_validate(const sample_set& samples, const train_config& config,
                         std::size_t threads) {
  config.validate();
  const std::size_t n = samples.size();
  if (n < kCvFolds) {
    throw error(error_code::too_few_rows, "ten-fold cross-validation needs at least 10 samples, got " +
                                              std::to_string(n));
  }
  // Each fold trains on roughly 90% of the samples.
  const std::size_t smallest_train = n - (n + kCvFolds - 1) / kCvFolds;
  if (smallest_train < config.m + 2) {
    throw error(error_code::too_few_rows,
                "cross-validation folds leave " + std::to_string(smallest_train) +
                    " training samples; m=" + std::to_string(config.m) + " needs " +
                    std::to_string(config.m + 2));
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 engine(mix_seed(config.seed, kFoldStream));
  std::shuffle(perm.begin(), perm.end(), engine);

  cv_report report;
  report.folds.resize(kCvFolds);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < kCvFolds; ++k) {
    const std::size_t size = n / kCvFolds + (k < n % kCvFolds ? 1 : 0);
    report.folds[k].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                           perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(report.folds[k].begin(), report.folds[k].end());
    pos += size;
  }

  report.fold_errors.assign(kCvFolds, 0.0);
  parallel_for(kCvFolds, threads, [&](std::size_t k) {
    const auto& held_out = report.folds[k];
    std::vector<std::size_t> kept;
    kept.reserve(n - held_out.size());
    for (std::size_t id = 0; id < n; ++id) {
      if (!std::binary_search(held_out.begin(), held_out.end(), id)) kept.push_back(id);
    }

    train_config fold_config = config;
    fold_config.seed = mix_seed(config.seed, kFoldTrainStream + k);
    const sample_set pool = samples.subset(kept);
    const auto result = train(pool, fold_config);

    const spatial_index index(pool);
    std::vector<feature_row> rows;
    rows.reserve(held_out.size());
    for (std::size_t id : held_out) {
      auto row = build_estimation_row(samples[id].position(), index, config.m);
      row.target = samples[id].value;
      rows.push_back(std::move(row));
    }
    report.fold_errors[k] = average_validation_error(result.trained.model, result.trained.norm, rows);
  });

  double sum = 0.0;
  for (double e : report.fold_errors) sum += e;
  report.mean = sum / static_cast<double>(kCvFolds);
  double ss = 0.0;
  for (double e : report.fold_errors) ss += (e - report.mean) * (e - report.mean);
  report.stddev = std::sqrt(ss / static_cast<double>(kCvFolds));
  return report;
}

}  // namespace nnn
