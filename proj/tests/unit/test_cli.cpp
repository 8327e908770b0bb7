#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "nnn/io.hpp"

namespace fs = std::filesystem;
using namespace nnn;

namespace {

struct outcome {
  int code = 0;
  std::string out;
  std::string err;
};

outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nnn_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

// Small, fast scenario: 20x20 grid, 40 wells, a short training run.
fs::path write_config(const fs::path& dir, const std::string& field_extra = "",
                      const std::string& train = R"({"m": 5, "max_epochs": 60, "hidden": [8]})") {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << R"({
  "out_dir": ")" << (dir / "out").string() << R"(",
  "grid": {"nx": 20, "ny": 20},
  "field": {"wells": 40, "range": 600)" << field_extra << R"(},
  "train": )" << train << R"(,
  "idw": {"m": 5},
  "kriging": {"m": 5}
})";
  return path;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("print-config round-trips through parse_config") {
  const auto r = run_cli({"print-config"});
  CHECK(r.code == 0);
  CHECK(r.out == cli::default_config_json());
  const auto parsed = cli::parse_config(r.out);
  CHECK(parsed.train.m == 15);
  CHECK(parsed.field.range == 1500.0);
  CHECK(parsed.grid.nx == 50);
  CHECK(cli::default_config_json() == r.out);
}

TEST_CASE("config errors exit 2") {
  const auto dir = fresh_dir("config");
  SUBCASE("unknown key") {
    std::ofstream(dir / "bad.json") << R"({"train": {"epochs": 10}})";
    const auto r = run_cli({"generate", "--config", (dir / "bad.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("epochs") != std::string::npos);
  }
  SUBCASE("wrong type") {
    std::ofstream(dir / "bad.json") << R"({"seed": "x"})";
    CHECK(run_cli({"generate", "--config", (dir / "bad.json").string()}).code == 2);
  }
  SUBCASE("invalid value") {
    std::ofstream(dir / "bad.json") << R"({"train": {"max_epochs": 0}})";
    CHECK(run_cli({"train", "--config", (dir / "bad.json").string()}).code == 2);
  }
  SUBCASE("bad flags") {
    CHECK(run_cli({"generate", "--grid", "10"}).code == 2);
    CHECK(run_cli({"generate", "--bogus"}).code == 2);
    CHECK(run_cli({}).code == 2);
  }
  SUBCASE("missing config file") {
    CHECK(run_cli({"generate", "--config", (dir / "none.json").string()}).code != 0);
  }
}

TEST_CASE("generate") {
  const auto dir = fresh_dir("generate");
  const auto config = write_config(dir);
  const auto r = run_cli({"generate", "--config", config.string()});
  REQUIRE(r.code == 0);
  const auto wells = lines_of(slurp(dir / "out" / "wells.csv"));
  REQUIRE(wells.size() == 41);
  CHECK(wells[0] == "id,x,y,value");
  CHECK(lines_of(slurp(dir / "out" / "truth.csv")).size() == 401);
  CHECK(fs::exists(dir / "out" / "truth.pgm"));

  SUBCASE("rerun is byte-identical") {
    const auto wells_before = slurp(dir / "out" / "wells.csv");
    const auto truth_before = slurp(dir / "out" / "truth.csv");
    const auto pgm_before = slurp(dir / "out" / "truth.pgm");
    REQUIRE(run_cli({"generate", "--config", config.string()}).code == 0);
    CHECK(slurp(dir / "out" / "wells.csv") == wells_before);
    CHECK(slurp(dir / "out" / "truth.csv") == truth_before);
    CHECK(slurp(dir / "out" / "truth.pgm") == pgm_before);
  }
  SUBCASE("seed flag changes the draw") {
    const auto before = slurp(dir / "out" / "wells.csv");
    REQUIRE(run_cli({"generate", "--config", config.string(), "--seed", "7"}).code == 0);
    CHECK(slurp(dir / "out" / "wells.csv") != before);
  }
  SUBCASE("zero variance gives wells at the mean") {
    const auto flat = write_config(dir, R"(, "std": 0.0, "mean": 0.23)");
    REQUIRE(run_cli({"generate", "--config", flat.string()}).code == 0);
    const auto set = io::read_wells(dir / "out" / "wells.csv");
    for (const auto& s : set) CHECK(s.value == doctest::Approx(0.23).epsilon(1e-14));
  }
  SUBCASE("more wells than cells is a data error") {
    CHECK(run_cli({"generate", "--config", config.string(), "--grid", "5,5"}).code == 3);
  }
}

TEST_CASE("train, estimate and cross-validate") {
  const auto dir = fresh_dir("pipeline");
  const auto config = write_config(dir);
  REQUIRE(run_cli({"generate", "--config", config.string()}).code == 0);

  const auto t = run_cli({"train", "--config", config.string()});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("stop_reason") != std::string::npos);
  const auto report = slurp(dir / "out" / "train_report.json");
  CHECK(report.find("\"stop_reason\"") != std::string::npos);
  CHECK(lines_of(slurp(dir / "out" / "train_loss.csv")).front() == "epoch,loss,val_error");
  const auto model = slurp(dir / "out" / "model.json");

  SUBCASE("training rerun is byte-identical") {
    REQUIRE(run_cli({"train", "--config", config.string()}).code == 0);
    CHECK(slurp(dir / "out" / "model.json") == model);
    CHECK(slurp(dir / "out" / "train_report.json") == report);
  }
  SUBCASE("point estimate surface") {
    REQUIRE(run_cli({"estimate", "--config", config.string()}).code == 0);
    CHECK(lines_of(slurp(dir / "out" / "estimate.csv")).size() == 401);
    CHECK(fs::exists(dir / "out" / "estimate.pgm"));
  }
  SUBCASE("ensemble outputs do not depend on threads") {
    REQUIRE(run_cli({"estimate", "--config", config.string(), "--realizations", "200", "--threads", "1"}).code == 0);
    std::vector<std::string> one;
    for (const char* name : {"ensemble_mean.csv", "ensemble_std.csv", "ensemble_p10.csv", "ensemble_p90.csv"}) {
      REQUIRE(fs::exists(dir / "out" / name));
      CHECK(lines_of(slurp(dir / "out" / name)).size() == 401);
      one.push_back(slurp(dir / "out" / name));
    }
    REQUIRE(run_cli({"estimate", "--config", config.string(), "--realizations", "200", "--threads", "3"}).code == 0);
    std::size_t k = 0;
    for (const char* name : {"ensemble_mean.csv", "ensemble_std.csv", "ensemble_p10.csv", "ensemble_p90.csv"}) {
      CHECK(slurp(dir / "out" / name) == one[k++]);
    }
  }
  SUBCASE("per-realization files on request") {
    REQUIRE(run_cli({"estimate", "--config", config.string(), "--realizations", "3", "--write-realizations"}).code == 0);
    CHECK(fs::exists(dir / "out" / "realization_0000.csv"));
    CHECK(fs::exists(dir / "out" / "realization_0002.csv"));
    CHECK_FALSE(fs::exists(dir / "out" / "realization_0003.csv"));
  }
  SUBCASE("model built for another m is rejected") {
    const auto r = run_cli({"estimate", "--config", config.string(), "--m", "6"});
    CHECK(r.code != 0);
    CHECK(r.err.find("WidthMismatch") != std::string::npos);
  }
  SUBCASE("cross-validation report") {
    const auto r = run_cli({"crossval", "--config", config.string()});
    REQUIRE(r.code == 0);
    const auto cv = slurp(dir / "out" / "cv_report.json");
    CHECK(cv.find("\"fold_errors\"") != std::string::npos);
    CHECK(cv.find("\"folds\"") != std::string::npos);
  }
}

TEST_CASE("data errors") {
  const auto dir = fresh_dir("data");
  const auto config = write_config(dir);
  fs::create_directories(dir / "out");

  SUBCASE("too few wells for m") {
    std::ofstream(dir / "out" / "wells.csv") << "id,x,y,value\n0,0,0,0.1\n1,1,0,0.2\n2,0,1,0.3\n";
    const auto r = run_cli({"train", "--config", config.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("NotEnoughNeighbors") != std::string::npos);
  }
  SUBCASE("malformed row") {
    std::ofstream(dir / "out" / "wells.csv") << "id,x,y,value\n0,0,0,0.1\n1,1,zero,0.2\n";
    const auto r = run_cli({"train", "--config", config.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("line 3") != std::string::npos);
  }
  SUBCASE("missing wells file") {
    const auto r = run_cli({"train", "--config", config.string(), "--wells", (dir / "nope.csv").string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("nope.csv") != std::string::npos);
  }
}

TEST_CASE("benchmark") {
  const auto dir = fresh_dir("benchmark");

  SUBCASE("table format") {
    const auto config = write_config(dir);
    REQUIRE(run_cli({"generate", "--config", config.string()}).code == 0);
    const auto r = run_cli({"benchmark", "--config", config.string()});
    REQUIRE(r.code == 0);
    const auto rows = lines_of(slurp(dir / "out" / "benchmark.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "method,rmse,mae,max_abs_err");
    CHECK(rows[1].rfind("nnn,", 0) == 0);
    CHECK(rows[2].rfind("idw,", 0) == 0);
    CHECK(rows[3].rfind("kriging,", 0) == 0);
    CHECK(r.out.find("method") != std::string::npos);
    for (const char* name : {"nnn.csv", "idw.csv", "kriging.csv", "nnn.pgm"}) CHECK(fs::exists(dir / "out" / name));

    REQUIRE(run_cli({"benchmark", "--config", config.string()}).code == 0);
    CHECK(lines_of(slurp(dir / "out" / "benchmark.csv")) == rows);
  }
  SUBCASE("constant field") {
    const auto config = write_config(dir, R"(, "std": 0.0, "mean": 0.2)", R"({"m": 5})");
    REQUIRE(run_cli({"generate", "--config", config.string()}).code == 0);
    const auto r = run_cli({"benchmark", "--config", config.string()});
    REQUIRE(r.code == 0);
    const auto rows = lines_of(slurp(dir / "out" / "benchmark.csv"));
    REQUIRE(rows.size() == 4);
    for (std::size_t k = 1; k < 4; ++k) {
      const auto first = rows[k].find(',');
      double rmse = -1.0;
      std::istringstream(rows[k].substr(first + 1, rows[k].find(',', first + 1) - first - 1)) >> rmse;
      CAPTURE(rows[k]);
      // Within the 0.5% tolerance of the field value.
      CHECK(rmse < 0.005 * 0.2);
    }
  }
}
