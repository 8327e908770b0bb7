#include "nnn/neural.hpp"

#include <cmath>
#include <string>

#include "nnn/error.hpp"

namespace nnn {

std::size_t mlp_model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

bool mlp_model::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

mlp_model init_model(std::size_t input_width, std::span<const std::size_t> hidden,
                     double noise_sigma, std::uint64_t seed) {
  if (input_width == 0) throw error(error_code::invalid_width, "input width must be at least 1");
  for (std::size_t w : hidden) {
    if (w == 0) throw error(error_code::invalid_width, "hidden widths must be at least 1");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw error(error_code::invalid_config, "noise_sigma must be finite and >= 0");
  }

  mlp_model model;
  model.noise_sigma = noise_sigma;
  model.seed = seed;
  model.layer_sizes.push_back(input_width);
  model.layer_sizes.insert(model.layer_sizes.end(), hidden.begin(), hidden.end());
  model.layer_sizes.push_back(1);

  std::mt19937_64 engine(seed);
  for (std::size_t k = 0; k + 1 < model.layer_sizes.size(); ++k) {
    const auto fan_in = static_cast<Eigen::Index>(model.layer_sizes[k]);
    const auto fan_out = static_cast<Eigen::Index>(model.layer_sizes[k + 1]);
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    dense_layer layer{Eigen::MatrixXd(fan_in, fan_out), Eigen::VectorXd::Zero(fan_out)};
    // Row-major fill so the draw order matches the serialized layout.
    for (Eigen::Index i = 0; i < fan_in; ++i) {
      for (Eigen::Index j = 0; j < fan_out; ++j) layer.weights(i, j) = dist(engine);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

double forward(const mlp_model& model, std::span<const double> input, noise_stream* noise) {
  if (input.size() != model.input_width()) {
    throw error(error_code::width_mismatch, "input width " + std::to_string(input.size()) +
                                                " does not match model width " +
                                                std::to_string(model.input_width()));
  }
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(input.data(),
                                                        static_cast<Eigen::Index>(input.size()));
  if (noise != nullptr && model.noise_sigma > 0.0) {
    for (Eigen::Index i = 0; i < h.size(); ++i) h[i] += model.noise_sigma * noise->next();
  }

  const std::size_t last = model.layers.size() - 1;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& layer = model.layers[k];
    Eigen::VectorXd z = layer.weights.transpose() * h + layer.bias;
    if (k < last) z = z.array().tanh();
    if (!z.allFinite()) {
      throw error(error_code::non_finite_activation,
                  "non-finite activation in layer " + std::to_string(k));
    }
    h = std::move(z);
  }
  return h[0];
}

batch perturb(const batch& rows, double sigma, noise_stream& noise) {
  batch out = rows;
  if (sigma == 0.0) return out;
  for (Eigen::Index r = 0; r < out.inputs.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.inputs.cols(); ++c) out.inputs(r, c) += sigma * noise.next();
  }
  return out;
}

namespace {

void check_batch(const mlp_model& model, const batch& rows) {
  if (rows.size() == 0) throw error(error_code::empty_batch, "batch has no rows");
  if (static_cast<std::size_t>(rows.inputs.cols()) != model.input_width()) {
    throw error(error_code::width_mismatch, "batch width " + std::to_string(rows.inputs.cols()) +
                                                " does not match model width " +
                                                std::to_string(model.input_width()));
  }
  if (rows.targets.size() != rows.inputs.rows()) {
    throw error(error_code::shape_mismatch, "batch has " + std::to_string(rows.inputs.rows()) +
                                                " rows but " + std::to_string(rows.targets.size()) +
                                                " targets");
  }
}

// Activations per layer: acts[0] is the input, acts[k+1] the output of layer k.
std::vector<Eigen::MatrixXd> forward_all(const mlp_model& model, const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(inputs);
  const std::size_t last = model.layers.size() - 1;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& layer = model.layers[k];
    Eigen::MatrixXd z = acts.back() * layer.weights;
    z.rowwise() += layer.bias.transpose();
    if (k < last) z = z.array().tanh();
    if (!z.allFinite()) {
      throw error(error_code::non_finite_activation,
                  "non-finite activation in layer " + std::to_string(k));
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

double loss(const mlp_model& model, const batch& rows, noise_stream* noise) {
  check_batch(model, rows);
  if (noise != nullptr) return loss(model, perturb(rows, model.noise_sigma, *noise), nullptr);
  const auto acts = forward_all(model, rows.inputs);
  const Eigen::VectorXd residual = acts.back().col(0) - rows.targets;
  return residual.squaredNorm() / static_cast<double>(rows.size());
}

gradient backward(const mlp_model& model, const batch& rows, noise_stream* noise) {
  check_batch(model, rows);
  if (noise != nullptr) return backward(model, perturb(rows, model.noise_sigma, *noise), nullptr);

  const auto acts = forward_all(model, rows.inputs);
  const double n = static_cast<double>(rows.size());
  const Eigen::VectorXd residual = acts.back().col(0) - rows.targets;

  gradient g;
  g.loss = residual.squaredNorm() / n;
  g.layers.resize(model.layers.size());

  // delta = d(loss)/d(pre-activation) of the current layer, one row per sample.
  Eigen::MatrixXd delta = (2.0 / n) * residual;
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    g.layers[k].weights = acts[k].transpose() * delta;
    g.layers[k].bias = delta.colwise().sum().transpose();
    if (k == 0) break;
    Eigen::MatrixXd upstream = delta * model.layers[k].weights.transpose();
    // acts[k] holds tanh outputs of layer k-1; tanh' = 1 - tanh^2.
    delta = upstream.array() * (1.0 - acts[k].array().square());
  }
  return g;
}

void sgd_step(mlp_model& model, const gradient& g, double learning_rate) {
  if (g.layers.size() != model.layers.size()) {
    throw error(error_code::shape_mismatch, "gradient layer count does not match model");
  }
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& l = model.layers[k];
    const auto& gl = g.layers[k];
    if (gl.weights.rows() != l.weights.rows() || gl.weights.cols() != l.weights.cols() ||
        gl.bias.size() != l.bias.size()) {
      throw error(error_code::shape_mismatch,
                  "gradient shape does not match layer " + std::to_string(k));
    }
  }

  std::vector<dense_layer> updated = model.layers;
  for (std::size_t k = 0; k < updated.size(); ++k) {
    updated[k].weights -= learning_rate * g.layers[k].weights;
    updated[k].bias -= learning_rate * g.layers[k].bias;
    if (!updated[k].weights.allFinite() || !updated[k].bias.allFinite()) {
      throw error(error_code::divergence,
                  "non-finite parameters in layer " + std::to_string(k) + " after SGD step");
    }
  }
  model.layers = std::move(updated);
}

}  // namespace nnn
