#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nnn/features.hpp"
#include "nnn/neural.hpp"
#include "nnn/spatial_index.hpp"

namespace nnn {

struct train_config {
  std::size_t m = 15;
  double train_fraction = 0.85;
  double learning_rate = 0.01;
  std::size_t max_epochs = 5000;
  double val_tolerance = 0.005;  // mean relative error
  std::size_t eval_every = 10;
  std::size_t batch_size = 0;  // 0 = full batch
  std::vector<std::size_t> hidden{32, 32};
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  // Throws invalid_config.
  void validate() const;
};

enum class stop_reason { tolerance_met, max_epochs };

std::string_view to_string(stop_reason reason);

struct validation_point {
  std::size_t epoch = 0;
  double error = 0.0;
};

struct train_report {
  double initial_loss = 0.0;
  std::vector<double> loss_history;  // noise-off training MSE after each epoch
  std::vector<validation_point> val_history;
  std::size_t stopped_epoch = 0;
  stop_reason reason = stop_reason::max_epochs;
  std::size_t best_model_epoch = 0;
  double best_val_error = 0.0;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
};

/// Everything needed to estimate at new locations (besides the samples themselves).
struct trained_model {
  mlp_model model;
  normalizer norm;
  std::size_t m = 0;
};

struct train_result {
  trained_model trained;
  train_report report;
};

struct split_indices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded uniform partition of 0..n-1: |train| = round(fraction * n) clamped to [1, n-1].
/// Throws too_few_rows for n < 2.
split_indices split(std::size_t n, double train_fraction, std::uint64_t seed);

/// Mean of |prediction - target| / |target| over the rows, using the noise-off forward pass
/// and denormalized predictions. Throws empty_input or zero_target.
double average_validation_error(const mlp_model& model, const normalizer& norm,
                                std::span<const feature_row> rows);

/// Packs normalized rows into a training batch. Every row must carry a target.
batch make_batch(const normalizer& norm, std::span<const feature_row> rows);

/// Holdout training with the validation-error stopping rule. Returns the snapshot with the
/// lowest recorded validation error.
train_result train(const sample_set& samples, const train_config& config);

struct cv_report {
  std::vector<std::vector<std::size_t>> folds;  // sample ids held out per fold
  std::vector<double> fold_errors;
  double mean = 0.0;
  double stddev = 0.0;  // population convention
};

inline constexpr std::size_t kCvFolds = 10;

/// Ten-fold cross-validation. Each fold trains a fresh model on the remaining samples only
/// (their neighbor pool excludes the held-out fold) and scores the held-out fold.
cv_report cross_validate(const sample_set& samples, const train_config& config,
                         std::size_t threads = 1);

}  // namespace nnn
