#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace nnn {

/// Seeded source of standard-normal draws for the random layer.
class noise_stream {
public:
  explicit noise_stream(std::uint64_t seed) : engine_(seed) {}

  double next() { return dist_(engine_); }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Fully connected layer computing weights^T * x + bias; weights are fan_in x fan_out.
struct dense_layer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Feed-forward regressor: random layer on the input, tanh hidden layers, linear scalar output.
///
/// The random layer adds noise_sigma * N(0, 1) to every input component when a noise stream
/// is supplied; without a stream (or with sigma 0) the network is deterministic.
struct mlp_model {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., 1
  std::vector<dense_layer> layers;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  std::size_t input_width() const { return layer_sizes.front(); }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Glorot-uniform weights in [-a, a], a = sqrt(6 / (fan_in + fan_out)); zero biases.
/// Throws invalid_width for a zero input or hidden width, invalid_config for sigma < 0.
mlp_model init_model(std::size_t input_width, std::span<const std::size_t> hidden,
                     double noise_sigma, std::uint64_t seed);

/// Throws width_mismatch or non_finite_activation.
double forward(const mlp_model& model, std::span<const double> input,
               noise_stream* noise = nullptr);

/// Normalized rows (one per matrix row) with their normalized targets.
struct batch {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

/// Applies the random layer to every row: inputs + sigma * eps, eps drawn row by row.
batch perturb(const batch& rows, double sigma, noise_stream& noise);

/// Mean squared error of the outputs against the targets. With a noise stream the inputs
/// are perturbed first. Throws empty_batch or width_mismatch.
double loss(const mlp_model& model, const batch& rows, noise_stream* noise = nullptr);

struct gradient {
  std::vector<dense_layer> layers;
  double loss = 0.0;  // loss at the point where the gradient was taken
};

/// d(loss)/d(every weight and bias). Sampled noise is a constant shift of the input, so with a
/// stream this is the exact gradient of the perturbed-batch loss.
gradient backward(const mlp_model& model, const batch& rows, noise_stream* noise = nullptr);

/// theta <- theta - learning_rate * g. Throws shape_mismatch, or divergence if any parameter
/// becomes non-finite (the model is left untouched in that case).
void sgd_step(mlp_model& model, const gradient& g, double learning_rate);

}  // namespace nnn
