#include "cli.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <memory>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "nnn/error.hpp"
#include "nnn/format.hpp"
#include "nnn/io.hpp"
#include "nnn/parallel.hpp"

namespace nnn::cli {

using json = nlohmann::json;

namespace {

[[noreturn]] void config_fail(const std::string& what) { throw error(error_code::invalid_config, what); }

// Reads known keys from `obj` through `fields`; any key without a handler is an error.
template <class Handlers>
void read_object(const json& obj, const std::string& where, const Handlers& handlers) {
  if (!obj.is_object()) config_fail("`" + where + "` must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    auto it = handlers.find(key);
    if (it == handlers.end()) config_fail("unknown config key `" + where + key + "`");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      config_fail("bad value for `" + where + key + "`: " + e.what());
    }
  }
}

using handler_map = std::map<std::string, std::function<void(const json&)>>;

template <class T>
std::function<void(const json&)> into(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

std::function<void(const json&)> into_path(std::filesystem::path& target) {
  return [&target](const json& v) { target = v.get<std::string>(); };
}

std::shared_ptr<spdlog::logger> logger() {
  auto log = spdlog::get("nnn");
  if (!log) {
    log = spdlog::stderr_logger_st("nnn");
    log->set_pattern("[%l] %v");
    const char* level = std::getenv("NNN_LOG");
    log->set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
  }
  return log;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw error(error_code::io_error, "cannot create output directory " + dir.string());
  }
}

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw error(error_code::io_error, what + " not found: " + path.string());
  }
}

void write_surface_files(const std::filesystem::path& dir, const std::string& stem, const grid_spec& grid,
                         const std::vector<double>& values, bool with_pgm) {
  std::ostringstream csv;
  io::write_surface_csv(csv, grid, values);
  io::write_text(dir / (stem + ".csv"), csv.str());
  if (with_pgm) {
    std::ostringstream pgm;
    io::write_pgm(pgm, grid, values);
    io::write_text(dir / (stem + ".pgm"), pgm.str());
  }
}

// Seed stream ids for run_config sub-seeds.
enum : std::uint64_t { kFieldStream = 11, kWellsStream = 12, kRealizationStream = 13 };

}  // namespace

std::uint64_t run_config::field_seed() const { return mix_seed(seed, kFieldStream); }
std::uint64_t run_config::wells_seed() const { return mix_seed(seed, kWellsStream); }
std::uint64_t run_config::realization_seed() const { return mix_seed(seed, kRealizationStream); }

void run_config::validate() const {
  grid.validate();
  field.validate();
  train.validate();
  if (threads < 1) config_fail("threads must be at least 1");
  if (realizations < 1) config_fail("realizations must be at least 1");
  if (!(idw.power > 0.0)) config_fail("idw.power must be > 0");
  if (kriging_m < 1) config_fail("kriging.m must be at least 1");
  if (variogram.lag_bins < 1) config_fail("variogram.lag_bins must be at least 1");
  if (!(well_noise >= 0.0)) config_fail("field.well_noise must be >= 0");
}

run_config parse_config(const std::string& json_text, run_config base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    config_fail(std::string("config is not valid JSON: ") + e.what());
  }
  run_config c = std::move(base);
  std::string nonlinearity_name(to_string(c.field.transform));

  const handler_map grid{{"x_min", into(c.grid.x_min)}, {"x_max", into(c.grid.x_max)},
                         {"y_min", into(c.grid.y_min)}, {"y_max", into(c.grid.y_max)},
                         {"nx", into(c.grid.nx)},       {"ny", into(c.grid.ny)}};
  const handler_map field{{"mean", into(c.field.mean)},
                          {"std", into(c.field.std)},
                          {"range", into(c.field.range)},
                          {"nonlinearity", into(nonlinearity_name)},
                          {"wells", into(c.n_wells)},
                          {"well_noise", into(c.well_noise)}};
  const handler_map train{{"m", into(c.train.m)},
                          {"train_fraction", into(c.train.train_fraction)},
                          {"learning_rate", into(c.train.learning_rate)},
                          {"max_epochs", into(c.train.max_epochs)},
                          {"val_tolerance", into(c.train.val_tolerance)},
                          {"eval_every", into(c.train.eval_every)},
                          {"batch_size", into(c.train.batch_size)},
                          {"hidden", into(c.train.hidden)},
                          {"noise_sigma", into(c.train.noise_sigma)}};
  const handler_map idw{{"power", into(c.idw.power)}, {"m", into(c.idw.m)}};
  const handler_map variogram{{"lag_bins", into(c.variogram.lag_bins)},
                              {"min_pairs", into(c.variogram.min_pairs)}};
  const handler_map kriging{{"m", into(c.kriging_m)}};

  const handler_map top{
      {"seed", into(c.seed)},
      {"out_dir", into_path(c.out_dir)},
      {"wells", into_path(c.wells)},
      {"truth", into_path(c.truth)},
      {"model", into_path(c.model)},
      {"threads", into(c.threads)},
      {"realizations", into(c.realizations)},
      {"write_realizations", into(c.write_realizations)},
      {"grid", [&](const json& v) { read_object(v, "grid.", grid); }},
      {"field", [&](const json& v) { read_object(v, "field.", field); }},
      {"train", [&](const json& v) { read_object(v, "train.", train); }},
      {"idw", [&](const json& v) { read_object(v, "idw.", idw); }},
      {"variogram", [&](const json& v) { read_object(v, "variogram.", variogram); }},
      {"kriging", [&](const json& v) { read_object(v, "kriging.", kriging); }},
  };
  read_object(doc, "", top);
  c.field.transform = parse_nonlinearity(nonlinearity_name);
  return c;
}

std::string default_config_json() {
  const run_config c;
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir.string();
  j["wells"] = "";
  j["truth"] = "";
  j["model"] = "";
  j["threads"] = c.threads;
  j["realizations"] = c.realizations;
  j["write_realizations"] = c.write_realizations;
  j["grid"] = {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"y_min", c.grid.y_min},
               {"y_max", c.grid.y_max}, {"nx", c.grid.nx},       {"ny", c.grid.ny}};
  j["field"] = {{"mean", c.field.mean},
                {"std", c.field.std},
                {"range", c.field.range},
                {"nonlinearity", std::string(to_string(c.field.transform))},
                {"wells", c.n_wells},
                {"well_noise", c.well_noise}};
  j["train"] = {{"m", c.train.m},
                {"train_fraction", c.train.train_fraction},
                {"learning_rate", c.train.learning_rate},
                {"max_epochs", c.train.max_epochs},
                {"val_tolerance", c.train.val_tolerance},
                {"eval_every", c.train.eval_every},
                {"batch_size", c.train.batch_size},
                {"hidden", c.train.hidden},
                {"noise_sigma", c.train.noise_sigma}};
  j["idw"] = {{"power", c.idw.power}, {"m", c.idw.m}};
  j["variogram"] = {{"lag_bins", c.variogram.lag_bins}, {"min_pairs", c.variogram.min_pairs}};
  j["kriging"] = {{"m", c.kriging_m}};
  return j.dump(2) + "\n";
}

metrics compare(const std::vector<double>& estimate, const std::vector<double>& truth) {
  if (estimate.size() != truth.size() || truth.empty()) {
    throw error(error_code::shape_mismatch, "estimate and truth surfaces differ in size");
  }
  metrics m;
  double ss = 0.0, sa = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = std::abs(estimate[i] - truth[i]);
    ss += e * e;
    sa += e;
    m.max_abs_err = std::max(m.max_abs_err, e);
  }
  const double n = static_cast<double>(truth.size());
  m.rmse = std::sqrt(ss / n);
  m.mae = sa / n;
  return m;
}

std::vector<double> read_surface_csv(const std::filesystem::path& path, const grid_spec& grid) {
  std::istringstream in(io::read_text(path));
  std::string line;
  std::size_t line_no = 1;
  auto fail = [&](const std::string& what) {
    throw error(error_code::parse_error, path.string() + ": line " + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line) || line.rfind("x,y,value", 0) != 0) fail("expected header `x,y,value`");
  std::vector<double> values;
  values.reserve(grid.cells());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::array<double, 3> v{};
    std::size_t start = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t comma = k < 2 ? line.find(',', start) : line.size();
      if (comma == std::string::npos || !parse_double(std::string_view(line).substr(start, comma - start), v[k])) {
        fail("malformed row `" + line + "`");
      }
      start = comma + 1;
    }
    const std::size_t cell = values.size();
    if (cell >= grid.cells()) fail("more rows than grid cells");
    const point2 c = grid.center(cell);
    const double tol = 1e-9 * std::max({1.0, std::abs(c.x), std::abs(c.y)});
    if (std::abs(c.x - v[0]) > tol || std::abs(c.y - v[1]) > tol) fail("cell center does not match the configured grid");
    values.push_back(v[2]);
  }
  if (values.size() != grid.cells()) fail("surface has " + std::to_string(values.size()) + " cells, grid has " + std::to_string(grid.cells()));
  return values;
}

int cmd_generate(const run_config& config, std::ostream& out) {
  ensure_dir(config.out_dir);
  field_spec spec = config.field;
  spec.seed = config.field_seed();
  const surface truth = generate_field(spec, config.grid);
  const sample_set wells = sample_wells(truth, config.n_wells, config.wells_seed(), config.well_noise);

  std::ostringstream truth_csv, wells_csv, truth_pgm;
  io::write_surface_csv(truth_csv, config.grid, truth.values);
  io::write_pgm(truth_pgm, config.grid, truth.values);
  io::write_wells(wells_csv, wells);
  io::write_text(config.truth_path(), truth_csv.str());
  io::write_text(config.out_dir / "truth.pgm", truth_pgm.str());
  io::write_text(config.wells_path(), wells_csv.str());

  const auto s = summarize_surface(truth.values);
  out << "generated " << wells.size() << " wells on a " << config.grid.nx << "x" << config.grid.ny
      << " field (" << to_string(spec.transform) << ")\n"
      << "field min " << format_double(s.min) << " max " << format_double(s.max) << " mean "
      << format_double(s.mean) << "\n"
      << "wrote " << config.truth_path().string() << ", " << config.wells_path().string() << "\n";
  return exit_ok;
}

int cmd_train(const run_config& config, std::ostream& out) {
  require_file(config.wells_path(), "wells file");
  ensure_dir(config.out_dir);
  const sample_set wells = io::read_wells(config.wells_path());
  train_config tc = config.train;
  tc.seed = config.seed;
  logger()->info("training on {} wells with m={}", wells.size(), tc.m);
  const auto result = train(wells, tc);

  std::ostringstream loss_csv;
  io::write_loss_csv(loss_csv, result.report);
  io::write_text(config.model_path(), io::model_to_json(result.trained));
  io::write_text(config.out_dir / "train_report.json", io::train_report_to_json(result.report));
  io::write_text(config.out_dir / "train_loss.csv", loss_csv.str());

  out << "stop_reason " << to_string(result.report.reason) << " at epoch " << result.report.stopped_epoch
      << "\nbest validation error " << format_double(result.report.best_val_error) << " at epoch "
      << result.report.best_model_epoch << " (tolerance " << format_double(tc.val_tolerance) << ")\n"
      << "wrote " << config.model_path().string() << "\n";
  return exit_ok;
}

int cmd_crossval(const run_config& config, std::ostream& out) {
  require_file(config.wells_path(), "wells file");
  ensure_dir(config.out_dir);
  const sample_set wells = io::read_wells(config.wells_path());
  train_config tc = config.train;
  tc.seed = config.seed;
  const auto report = cross_validate(wells, tc, config.threads);
  io::write_text(config.out_dir / "cv_report.json", io::cv_report_to_json(report));

  out << "fold errors:";
  for (double e : report.fold_errors) out << ' ' << format_double(e);
  out << "\nmean " << format_double(report.mean) << " std " << format_double(report.stddev) << "\n";
  return exit_ok;
}

int cmd_estimate(const run_config& config, std::ostream& out) {
  require_file(config.wells_path(), "wells file");
  require_file(config.model_path(), "model file");
  ensure_dir(config.out_dir);
  const spatial_index index(io::read_wells(config.wells_path()));
  trained_model trained = io::model_from_json(io::read_text(config.model_path()));
  trained.m = config.train.m;

  const surface est = estimate_grid(trained, index, config.grid, config.threads);
  write_surface_files(config.out_dir, "estimate", config.grid, est.values, true);
  const auto s = summarize_surface(est.values);
  out << "estimate min " << format_double(s.min) << " max " << format_double(s.max) << " mean "
      << format_double(s.mean) << "; " << s.out_of_unit_range << " cells outside [0, 1]\n";

  if (config.realizations > 1) {
    const auto ens = realize_grid(trained, index, config.grid, config.realizations,
                                  config.realization_seed(), config.threads);
    write_surface_files(config.out_dir, "ensemble_mean", config.grid, ens.mean, false);
    write_surface_files(config.out_dir, "ensemble_std", config.grid, ens.std, true);
    write_surface_files(config.out_dir, "ensemble_p10", config.grid, ens.p10, false);
    write_surface_files(config.out_dir, "ensemble_p90", config.grid, ens.p90, false);
    if (config.write_realizations) {
      for (std::size_t r = 0; r < ens.count(); ++r) {
        std::ostringstream name;
        name << "realization_" << std::setw(4) << std::setfill('0') << r;
        write_surface_files(config.out_dir, name.str(), config.grid, ens.realizations[r], false);
      }
    }
    const auto sd = summarize_surface(ens.std);
    out << "ensemble of " << ens.count() << " realizations; std min " << format_double(sd.min)
        << " max " << format_double(sd.max) << "\n";
  }
  return exit_ok;
}

int cmd_benchmark(const run_config& config, std::ostream& out) {
  require_file(config.wells_path(), "wells file");
  require_file(config.truth_path(), "truth file");
  ensure_dir(config.out_dir);
  const sample_set wells = io::read_wells(config.wells_path());
  const std::vector<double> truth = read_surface_csv(config.truth_path(), config.grid);
  const spatial_index index(wells);

  train_config tc = config.train;
  tc.seed = config.seed;
  const auto trained = train(wells, tc);
  const surface nn = estimate_grid(trained.trained, index, config.grid, config.threads);

  std::vector<double> idw(config.grid.cells()), krig(config.grid.cells());
  const auto vgm = fit_variogram(wells, config.variogram);
  parallel_for(config.grid.cells(), config.threads, [&](std::size_t c) {
    idw[c] = idw_estimate(index, config.grid.center(c), config.idw);
    krig[c] = kriging_estimate(index, config.grid.center(c), vgm, config.kriging_m).value;
  });
  write_surface_files(config.out_dir, "nnn", config.grid, nn.values, true);
  write_surface_files(config.out_dir, "idw", config.grid, idw, true);
  write_surface_files(config.out_dir, "kriging", config.grid, krig, true);

  const std::vector<std::pair<std::string, metrics>> rows{
      {"nnn", compare(nn.values, truth)}, {"idw", compare(idw, truth)}, {"kriging", compare(krig, truth)}};
  std::ostringstream csv;
  csv << "method,rmse,mae,max_abs_err\n";
  for (const auto& [name, m] : rows) {
    csv << name << ',' << format_double(m.rmse) << ',' << format_double(m.mae) << ','
        << format_double(m.max_abs_err) << '\n';
  }
  io::write_text(config.out_dir / "benchmark.csv", csv.str());

  out << std::left << std::setw(10) << "method" << std::right << std::setw(14) << "rmse"
      << std::setw(14) << "mae" << std::setw(14) << "max_abs_err" << "\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& [name, m] : rows) {
    out << std::left << std::setw(10) << name << std::right << std::setw(14) << m.rmse << std::setw(14)
        << m.mae << std::setw(14) << m.max_abs_err << "\n";
  }
  out.unsetf(std::ios::floatfield);
  out << "variogram nugget " << format_double(vgm.nugget) << " sill " << format_double(vgm.sill)
      << " range " << format_double(vgm.range) << (vgm.degenerate ? " (degenerate)" : "") << "\n"
      << "nnn training stopped: " << to_string(trained.report.reason) << "\n";
  return exit_ok;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nearest-neighbor neural network spatial interpolation", "nnn"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> m, realizations, threads;
  std::string grid_text, out_dir, wells, truth, model;
  bool write_realizations = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config");
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--m", m, "Neighbor count for training and estimation");
    sub->add_option("--grid", grid_text, "Grid cell counts as nx,ny");
    sub->add_option("--realizations", realizations, "Realization count R for estimate");
    sub->add_option("--out-dir", out_dir, "Output directory");
    sub->add_option("--threads", threads, "Worker threads for grid evaluation");
    sub->add_option("--wells", wells, "Wells CSV path");
    sub->add_option("--truth", truth, "Ground-truth surface CSV path");
    sub->add_option("--model", model, "Model JSON path");
    sub->add_flag("--write-realizations", write_realizations, "Also write every realization surface");
  };
  std::vector<std::pair<CLI::App*, int (*)(const run_config&, std::ostream&)>> commands{
      {app.add_subcommand("generate", "Generate a synthetic field and well set"), cmd_generate},
      {app.add_subcommand("train", "Train the network on a wells file"), cmd_train},
      {app.add_subcommand("crossval", "Ten-fold cross-validation"), cmd_crossval},
      {app.add_subcommand("estimate", "Estimate a grid (and realizations) with a trained model"), cmd_estimate},
      {app.add_subcommand("benchmark", "Compare the network with IDW and kriging against truth"), cmd_benchmark},
  };
  for (auto& [sub, fn] : commands) add_common(sub);
  app.add_subcommand("print-config", "Print the default config");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }

  if (app.got_subcommand("print-config")) {
    out << default_config_json();
    return exit_ok;
  }

  try {
    run_config config;
    if (!config_path.empty()) config = parse_config(io::read_text(config_path));
    if (seed) config.seed = *seed;
    if (m) {
      config.train.m = *m;
      config.idw.m = *m;
      config.kriging_m = *m;
    }
    if (realizations) config.realizations = *realizations;
    if (threads) config.threads = *threads;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!wells.empty()) config.wells = wells;
    if (!truth.empty()) config.truth = truth;
    if (!model.empty()) config.model = model;
    if (write_realizations) config.write_realizations = true;
    if (!grid_text.empty()) {
      const auto comma = grid_text.find(',');
      double nx = 0, ny = 0;
      if (comma == std::string::npos || !parse_double(std::string_view(grid_text).substr(0, comma), nx) ||
          !parse_double(std::string_view(grid_text).substr(comma + 1), ny) || nx < 1 || ny < 1 ||
          nx != std::floor(nx) || ny != std::floor(ny)) {
        config_fail("--grid expects nx,ny with positive integers, got `" + grid_text + "`");
      }
      config.grid.nx = static_cast<std::size_t>(nx);
      config.grid.ny = static_cast<std::size_t>(ny);
    }
    config.validate();

    for (auto& [sub, fn] : commands) {
      if (sub->parsed()) return fn(config, out);
    }
    return exit_config;
  } catch (const error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.category()) {
      case error_category::config: return exit_config;
      case error_category::data: return exit_data;
      case error_category::numerical: return exit_numerical;
    }
    return exit_data;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_data;
  }
}

}  // namespace nnn::cli
