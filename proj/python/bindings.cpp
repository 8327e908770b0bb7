#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "nnn/baselines.hpp"
#include "nnn/error.hpp"
#include "nnn/estimate.hpp"
#include "nnn/features.hpp"
#include "nnn/io.hpp"
#include "nnn/synth.hpp"
#include "nnn/training.hpp"

namespace py = pybind11;
using namespace nnn;

namespace {

using array_d = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const array_d& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

array_d grid_array(const grid_spec& grid, const std::vector<double>& values) {
  array_d out({grid.ny, grid.nx});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

sample_set make_samples(const array_d& x, const array_d& y, const array_d& values) {
  const auto xs = to_vector(x), ys = to_vector(y), vs = to_vector(values);
  return sample_set::from_columns(xs, ys, vs);
}

py::dict report_dict(const train_report& r) {
  py::dict d;
  d["stop_reason"] = std::string(to_string(r.reason));
  d["stopped_epoch"] = r.stopped_epoch;
  d["best_model_epoch"] = r.best_model_epoch;
  d["best_val_error"] = r.best_val_error;
  d["initial_loss"] = r.initial_loss;
  d["loss_history"] = r.loss_history;
  std::vector<std::pair<std::size_t, double>> vals;
  for (const auto& v : r.val_history) vals.emplace_back(v.epoch, v.error);
  d["val_history"] = vals;
  d["n_train"] = r.n_train;
  d["n_validation"] = r.n_validation;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nearest-neighbor neural network interpolation of scattered 2-D property data";

  static py::exception<error> nnn_error(m, "NnnError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const error& e) {
      py::set_error(nnn_error, e.what());
    }
  });

  py::class_<grid_spec>(m, "GridSpec")
      .def(py::init([](double x_min, double x_max, double y_min, double y_max, std::size_t nx, std::size_t ny) {
             grid_spec g{x_min, x_max, y_min, y_max, nx, ny};
             g.validate();
             return g;
           }),
           py::arg("x_min"), py::arg("x_max"), py::arg("y_min"), py::arg("y_max"), py::arg("nx"), py::arg("ny"))
      .def_readonly("x_min", &grid_spec::x_min)
      .def_readonly("x_max", &grid_spec::x_max)
      .def_readonly("y_min", &grid_spec::y_min)
      .def_readonly("y_max", &grid_spec::y_max)
      .def_readonly("nx", &grid_spec::nx)
      .def_readonly("ny", &grid_spec::ny)
      .def("center", [](const grid_spec& g, std::size_t i, std::size_t j) {
        const auto p = g.center(i, j);
        return py::make_tuple(p.x, p.y);
      });

  py::class_<spatial_index>(m, "SpatialIndex")
      .def(py::init([](const array_d& x, const array_d& y, const array_d& values) {
             return spatial_index(make_samples(x, y, values));
           }),
           py::arg("x"), py::arg("y"), py::arg("values"))
      .def("__len__", &spatial_index::size)
      .def(
          "knn",
          [](const spatial_index& idx, double x, double y, std::size_t k, std::optional<std::size_t> exclude) {
            const auto nb = idx.knn({x, y}, k, exclude);
            return py::make_tuple(nb.indices, nb.distances);
          },
          py::arg("x"), py::arg("y"), py::arg("m"), py::arg("exclude") = py::none(),
          "Indices and distances of the m nearest samples, ties broken by smaller id.");

  m.def(
      "training_matrix",
      [](const spatial_index& idx, std::size_t k) {
        const auto rows = build_training_matrix(idx, k);
        const std::size_t width = feature_width(k);
        array_d features({rows.size(), width});
        array_d targets(rows.size());
        auto f = features.mutable_unchecked<2>();
        auto t = targets.mutable_unchecked<1>();
        for (std::size_t r = 0; r < rows.size(); ++r) {
          const auto flat = rows[r].flatten();
          for (std::size_t c = 0; c < width; ++c) f(r, c) = flat[c];
          t(r) = *rows[r].target;
        }
        return py::make_tuple(features, targets);
      },
      py::arg("index"), py::arg("m"),
      "Rows (qx, qy, x1, y1, v1, ..., xm, ym, vm) for every sample with its m nearest other samples.");

  py::class_<train_config>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("m", &train_config::m)
      .def_readwrite("train_fraction", &train_config::train_fraction)
      .def_readwrite("learning_rate", &train_config::learning_rate)
      .def_readwrite("max_epochs", &train_config::max_epochs)
      .def_readwrite("val_tolerance", &train_config::val_tolerance)
      .def_readwrite("eval_every", &train_config::eval_every)
      .def_readwrite("batch_size", &train_config::batch_size)
      .def_readwrite("hidden", &train_config::hidden)
      .def_readwrite("noise_sigma", &train_config::noise_sigma)
      .def_readwrite("seed", &train_config::seed);

  py::class_<trained_model>(m, "Model")
      .def_readonly("m", &trained_model::m)
      .def_property_readonly("layer_sizes", [](const trained_model& t) { return t.model.layer_sizes; })
      .def_property_readonly("noise_sigma", [](const trained_model& t) { return t.model.noise_sigma; })
      .def("to_json", &io::model_to_json)
      .def_static("from_json", &io::model_from_json)
      .def(
          "estimate",
          [](const trained_model& t, const spatial_index& idx, double x, double y) {
            return estimate_point(t, idx, {x, y});
          },
          py::arg("index"), py::arg("x"), py::arg("y"));

  m.def(
      "train",
      [](const spatial_index& idx, const train_config& config) {
        train_result result;
        {
          py::gil_scoped_release unlocked;
          result = train(idx.samples(), config);
        }
        return py::make_tuple(std::move(result.trained), report_dict(result.report));
      },
      py::arg("index"), py::arg("config"));

  m.def(
      "cross_validate",
      [](const spatial_index& idx, const train_config& config, std::size_t threads) {
        const auto r = cross_validate(idx.samples(), config, threads);
        py::dict d;
        d["folds"] = r.folds;
        d["fold_errors"] = r.fold_errors;
        d["mean"] = r.mean;
        d["stddev"] = r.stddev;
        return d;
      },
      py::arg("index"), py::arg("config"), py::arg("threads") = 1);

  m.def(
      "estimate_grid",
      [](const trained_model& t, const spatial_index& idx, const grid_spec& g, std::size_t threads) {
        return grid_array(g, estimate_grid(t, idx, g, threads).values);
      },
      py::arg("model"), py::arg("index"), py::arg("grid"), py::arg("threads") = 1,
      "Noise-off point estimates, shape (ny, nx).");

  m.def(
      "realize_grid",
      [](const trained_model& t, const spatial_index& idx, const grid_spec& g, std::size_t r,
         std::uint64_t seed, std::size_t threads) {
        const auto ens = realize_grid(t, idx, g, r, seed, threads);
        array_d stack({ens.count(), g.ny, g.nx});
        double* out = stack.mutable_data();
        for (const auto& real : ens.realizations) out = std::copy(real.begin(), real.end(), out);
        py::dict d;
        d["realizations"] = stack;
        d["mean"] = grid_array(g, ens.mean);
        d["std"] = grid_array(g, ens.std);
        d["p10"] = grid_array(g, ens.p10);
        d["p90"] = grid_array(g, ens.p90);
        return d;
      },
      py::arg("model"), py::arg("index"), py::arg("grid"), py::arg("realizations"), py::arg("seed"),
      py::arg("threads") = 1);

  m.def(
      "idw",
      [](const spatial_index& idx, double x, double y, double power, std::size_t k) {
        return idw_estimate(idx, {x, y}, {power, k});
      },
      py::arg("index"), py::arg("x"), py::arg("y"), py::arg("power") = 2.0, py::arg("m") = 0);

  py::class_<variogram_model>(m, "Variogram")
      .def(py::init([](double nugget, double sill, double range) { return variogram_model{nugget, sill, range, false}; }),
           py::arg("nugget"), py::arg("sill"), py::arg("range"))
      .def_readonly("nugget", &variogram_model::nugget)
      .def_readonly("sill", &variogram_model::sill)
      .def_readonly("range", &variogram_model::range)
      .def_readonly("degenerate", &variogram_model::degenerate)
      .def("gamma", &variogram_model::gamma);

  m.def(
      "fit_variogram",
      [](const spatial_index& idx, std::size_t lag_bins, std::size_t min_pairs) {
        return fit_variogram(idx.samples(), {lag_bins, min_pairs});
      },
      py::arg("index"), py::arg("lag_bins") = 12, py::arg("min_pairs") = 5);

  m.def(
      "kriging",
      [](const spatial_index& idx, double x, double y, const variogram_model& v, std::size_t k) {
        const auto r = kriging_estimate(idx, {x, y}, v, k);
        return py::make_tuple(r.value, r.variance, r.weights);
      },
      py::arg("index"), py::arg("x"), py::arg("y"), py::arg("variogram"), py::arg("m"),
      "Ordinary kriging: (value, variance, weights).");

  m.def(
      "generate_field",
      [](const grid_spec& g, double mean, double std, double range, const std::string& nonlin, std::uint64_t seed) {
        return grid_array(g, generate_field({mean, std, range, parse_nonlinearity(nonlin), seed}, g).values);
      },
      py::arg("grid"), py::arg("mean") = 0.2, py::arg("std") = 0.03, py::arg("range") = 1500.0,
      py::arg("nonlinearity") = "squashed", py::arg("seed") = 0);

  m.def(
      "sample_wells",
      [](const grid_spec& g, const array_d& field, std::size_t n, std::uint64_t seed, double noise) {
        if (static_cast<std::size_t>(field.size()) != g.cells()) {
          throw error(error_code::shape_mismatch, "field does not match the grid");
        }
        const auto wells = sample_wells(surface{g, to_vector(field)}, n, seed, noise);
        std::vector<double> x, y, v;
        for (const auto& s : wells) {
          x.push_back(s.x);
          y.push_back(s.y);
          v.push_back(s.value);
        }
        return py::make_tuple(array_d(x.size(), x.data()), array_d(y.size(), y.data()), array_d(v.size(), v.data()));
      },
      py::arg("grid"), py::arg("field"), py::arg("n"), py::arg("seed") = 0, py::arg("noise") = 0.0);

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
