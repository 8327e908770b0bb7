#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nnn/baselines.hpp"
#include "nnn/estimate.hpp"
#include "nnn/synth.hpp"
#include "nnn/training.hpp"

namespace nnn::cli {

enum exit_code : int {
  exit_ok = 0,
  exit_config = 2,
  exit_data = 3,
  exit_numerical = 4,
};

/// Every setting of a run. Loaded from one JSON document; keys not listed here are rejected.
struct run_config {
  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  std::filesystem::path wells;  // empty: <out_dir>/wells.csv
  std::filesystem::path truth;  // empty: <out_dir>/truth.csv
  std::filesystem::path model;  // empty: <out_dir>/model.json
  std::size_t threads = 1;
  std::size_t realizations = 1;
  bool write_realizations = false;

  grid_spec grid{0.0, 1000.0, 0.0, 1000.0, 50, 50};
  field_spec field;
  std::size_t n_wells = 100;
  double well_noise = 0.0;
  train_config train;
  idw_params idw{2.0, 15};
  variogram_settings variogram;
  std::size_t kriging_m = 15;

  std::filesystem::path wells_path() const { return wells.empty() ? out_dir / "wells.csv" : wells; }
  std::filesystem::path truth_path() const { return truth.empty() ? out_dir / "truth.csv" : truth; }
  std::filesystem::path model_path() const { return model.empty() ? out_dir / "model.json" : model; }

  // Sub-seeds derived from `seed`.
  std::uint64_t field_seed() const;
  std::uint64_t wells_seed() const;
  std::uint64_t realization_seed() const;

  // Throws invalid_config.
  void validate() const;
};

/// Parses a JSON config over the defaults. Throws invalid_config for unknown keys or bad types.
run_config parse_config(const std::string& json_text, run_config base = {});

/// Full default config as JSON (what configs/default.json ships).
std::string default_config_json();

int cmd_generate(const run_config& config, std::ostream& out);
int cmd_train(const run_config& config, std::ostream& out);
int cmd_crossval(const run_config& config, std::ostream& out);
int cmd_estimate(const run_config& config, std::ostream& out);
int cmd_benchmark(const run_config& config, std::ostream& out);

struct metrics {
  double rmse = 0.0;
  double mae = 0.0;
  double max_abs_err = 0.0;
};

metrics compare(const std::vector<double>& estimate, const std::vector<double>& truth);

/// Grid read back from a surface CSV must match `grid` cell by cell. Throws parse_error.
std::vector<double> read_surface_csv(const std::filesystem::path& path, const grid_spec& grid);

/// Entry point: `args` excludes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nnn::cli
