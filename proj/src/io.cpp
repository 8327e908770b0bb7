#include "nnn/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "nnn/error.hpp"
#include "nnn/format.hpp"

namespace nnn::io {

using json = nlohmann::json;

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw error(error_code::parse_error, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

sample_set read_wells(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) parse_fail(1, "missing header `id,x,y,value`");
  ++line_no;
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  if (header.size() != 4 || trim(header[0]) != "id" || trim(header[1]) != "x" ||
      trim(header[2]) != "y" || trim(header[3]) != "value") {
    parse_fail(1, "expected header `id,x,y,value`, got `" + line + "`");
  }

  std::vector<sample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4) {
      parse_fail(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    double vals[4];
    for (int k = 0; k < 4; ++k) {
      if (!parse_double(fields[static_cast<std::size_t>(k)], vals[k]) || !std::isfinite(vals[k])) {
        parse_fail(line_no, "cannot parse `" + std::string(trim(fields[static_cast<std::size_t>(k)])) +
                                "` as a finite number");
      }
    }
    if (vals[0] != static_cast<double>(samples.size())) {
      parse_fail(line_no, "expected id " + std::to_string(samples.size()) + ", ids must run 0..N-1 in order");
    }
    samples.push_back({samples.size(), vals[1], vals[2], vals[3]});
  }
  return sample_set(std::move(samples));
}

sample_set read_wells(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(error_code::io_error, "cannot open wells file " + path.string());
  try {
    return read_wells(in);
  } catch (const error& e) {
    if (e.code() == error_code::parse_error) {
      throw error(error_code::parse_error, path.string() + ": " + std::string(e.what()).substr(to_string(error_code::parse_error).size() + 2));
    }
    throw;
  }
}

void write_wells(std::ostream& out, const sample_set& samples) {
  out << "id,x,y,value\n";
  for (const auto& s : samples) {
    out << s.id << ',' << format_double(s.x) << ',' << format_double(s.y) << ','
        << format_double(s.value) << '\n';
  }
}

namespace {

void require_cells(const grid_spec& grid, const std::vector<double>& values) {
  if (values.size() != grid.cells()) {
    throw error(error_code::shape_mismatch, std::to_string(values.size()) + " values for a grid of " +
                                                std::to_string(grid.cells()) + " cells");
  }
}

}  // namespace

void write_surface_csv(std::ostream& out, const grid_spec& grid, const std::vector<double>& values) {
  require_cells(grid, values);
  out << "x,y,value\n";
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const point2 p = grid.center(c);
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(values.at(c)) << '\n';
  }
}

void write_pgm(std::ostream& out, const grid_spec& grid, const std::vector<double>& values) {
  require_cells(grid, values);
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = any ? std::min(lo, v) : v;
    hi = any ? std::max(hi, v) : v;
    any = true;
  }
  out << "P5\n# min=" << format_double(lo) << " max=" << format_double(hi)
      << " gray=round(255*(value-min)/(max-min)); first row is largest y\n"
      << grid.nx << ' ' << grid.ny << "\n255\n";
  std::string pixels(grid.cells(), '\0');
  for (std::size_t j = 0; j < grid.ny; ++j) {
    const std::size_t image_row = grid.ny - 1 - j;
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double v = values.at(j * grid.nx + i);
      long gray = 0;
      if (std::isfinite(v) && hi > lo) gray = std::lround(255.0 * (v - lo) / (hi - lo));
      pixels[image_row * grid.nx + i] = static_cast<char>(static_cast<unsigned char>(std::clamp(gray, 0L, 255L)));
    }
  }
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
}

std::string model_to_json(const trained_model& trained) {
  const auto& model = trained.model;
  json j;
  j["format"] = "nnn-model";
  j["version"] = 1;
  j["m"] = trained.m;
  j["seed"] = model.seed;
  j["noise_sigma"] = model.noise_sigma;
  j["layer_sizes"] = model.layer_sizes;
  j["layers"] = json::array();
  for (const auto& layer : model.layers) {
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(layer.weights(r, c));
    }
    std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
    j["layers"].push_back({{"weights", weights}, {"bias", bias}});
  }
  json features = json::array();
  for (const auto& a : trained.norm.features()) features.push_back({{"shift", a.shift}, {"scale", a.scale}});
  j["normalizer"] = {{"features", features},
                     {"target", {{"shift", trained.norm.target().shift}, {"scale", trained.norm.target().scale}}}};
  return j.dump(2) + "\n";
}

trained_model model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "nnn-model") throw error(error_code::parse_error, "not an nnn model file");

    trained_model out;
    out.m = j.at("m").get<std::size_t>();
    auto& model = out.model;
    model.seed = j.at("seed").get<std::uint64_t>();
    model.noise_sigma = j.at("noise_sigma").get<double>();
    model.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto& layers = j.at("layers");
    if (model.layer_sizes.size() < 2 || layers.size() != model.layer_sizes.size() - 1) {
      throw error(error_code::parse_error, "layer list does not match layer_sizes");
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto fan_in = static_cast<Eigen::Index>(model.layer_sizes[k]);
      const auto fan_out = static_cast<Eigen::Index>(model.layer_sizes[k + 1]);
      const auto weights = layers[k].at("weights").get<std::vector<double>>();
      const auto bias = layers[k].at("bias").get<std::vector<double>>();
      if (weights.size() != static_cast<std::size_t>(fan_in * fan_out) ||
          bias.size() != static_cast<std::size_t>(fan_out)) {
        throw error(error_code::parse_error, "layer " + std::to_string(k) + " has the wrong parameter count");
      }
      dense_layer layer{Eigen::MatrixXd(fan_in, fan_out), Eigen::VectorXd(fan_out)};
      std::size_t idx = 0;
      for (Eigen::Index r = 0; r < fan_in; ++r) {
        for (Eigen::Index c = 0; c < fan_out; ++c) layer.weights(r, c) = weights[idx++];
      }
      for (Eigen::Index c = 0; c < fan_out; ++c) layer.bias[c] = bias[static_cast<std::size_t>(c)];
      model.layers.push_back(std::move(layer));
    }

    std::vector<normalizer::affine> features;
    for (const auto& f : j.at("normalizer").at("features")) {
      features.push_back({f.at("shift").get<double>(), f.at("scale").get<double>()});
    }
    const auto& t = j.at("normalizer").at("target");
    out.norm = normalizer(std::move(features), {t.at("shift").get<double>(), t.at("scale").get<double>()});
    if (out.norm.width() != model.input_width()) {
      throw error(error_code::parse_error, "normalizer width does not match the model input");
    }
    return out;
  } catch (const json::exception& e) {
    throw error(error_code::parse_error, std::string("malformed model JSON: ") + e.what());
  }
}

std::string train_report_to_json(const train_report& report) {
  json j;
  j["stop_reason"] = std::string(to_string(report.reason));
  j["stopped_epoch"] = report.stopped_epoch;
  j["best_model_epoch"] = report.best_model_epoch;
  j["best_val_error"] = report.best_val_error;
  j["initial_loss"] = report.initial_loss;
  j["n_train"] = report.n_train;
  j["n_validation"] = report.n_validation;
  j["loss_history"] = report.loss_history;
  json vals = json::array();
  for (const auto& v : report.val_history) vals.push_back({{"epoch", v.epoch}, {"error", v.error}});
  j["val_history"] = vals;
  return j.dump(2) + "\n";
}

std::string cv_report_to_json(const cv_report& report) {
  json j;
  j["folds"] = report.folds;
  j["fold_errors"] = report.fold_errors;
  j["mean"] = report.mean;
  j["stddev"] = report.stddev;
  return j.dump(2) + "\n";
}

void write_loss_csv(std::ostream& out, const train_report& report) {
  out << "epoch,loss,val_error\n";
  std::size_t v = 0;
  for (std::size_t e = 0; e < report.loss_history.size(); ++e) {
    const std::size_t epoch = e + 1;
    out << epoch << ',' << format_double(report.loss_history[e]) << ',';
    if (v < report.val_history.size() && report.val_history[v].epoch == epoch) {
      out << format_double(report.val_history[v].error);
      ++v;
    }
    out << '\n';
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(error_code::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(error_code::io_error, "cannot write " + path.string());
  out << text;
  if (!out) throw error(error_code::io_error, "failed writing " + path.string());
}

}  // namespace nnn::io
