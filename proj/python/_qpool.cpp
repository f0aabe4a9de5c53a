#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "qpool/app.hpp"
#include "qpool/autodiff.hpp"
#include "qpool/capacity.hpp"
#include "qpool/circuits.hpp"
#include "qpool/data.hpp"
#include "qpool/errors.hpp"

namespace py = pybind11;
using namespace qpool;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

py::array_t<double> images_of(const data::Dataset& d) {
  py::array_t<double> out({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(d.height),
                           static_cast<py::ssize_t>(d.width)});
  std::copy(d.pixels.begin(), d.pixels.end(), out.mutable_data());
  return out;
}

py::dict stat_dict(const app::Stat& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["std"] = s.std;
  d["min"] = s.min;
  d["max"] = s.max;
  return d;
}

}  // namespace

PYBIND11_MODULE(_qpool, m) {
  m.doc() = "Quantum pooling QCCNN core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("ansatz_keys", &circuits::ansatz_keys);

  py::class_<circuits::Ansatz>(m, "Ansatz")
      .def(py::init([](const std::string& key) { return circuits::make_ansatz(key); }), py::arg("key"))
      .def_readonly("key", &circuits::Ansatz::key)
      .def_property_readonly("num_params", &circuits::Ansatz::num_params)
      .def_property_readonly("num_readouts", &circuits::Ansatz::num_readouts)
      .def_property_readonly("num_qubits", [](const circuits::Ansatz& a) { return a.circuit.num_qubits(); })
      .def(
          "expectations",
          [](const circuits::Ansatz& a, const Array& x, const Array& theta) {
            return a.expectations(to_vector(x), to_vector(theta));
          },
          py::arg("x"), py::arg("theta"), "Raw <Z> readouts for one 4-pixel patch.")
      .def(
          "jacobian",
          [](const circuits::Ansatz& a, const Array& x, const Array& theta) {
            const auto xv = to_vector(x);
            circuits::validate_patch(xv);
            const auto j = autodiff::param_shift_jacobian(a.deferred, to_vector(theta), xv);
            py::array_t<double> out({j.num_readouts, j.num_params});
            std::copy(j.values.begin(), j.values.end(), out.mutable_data());
            return out;
          },
          py::arg("x"), py::arg("theta"), "Parameter-shift Jacobian, shape (readouts, params).");

  m.def(
      "load_dataset",
      [](const std::string& source) {
        const auto d = data::load_source(source);
        py::dict out;
        out["train_images"] = images_of(d.train);
        out["train_labels"] = d.train.labels;
        out["val_images"] = images_of(d.val);
        out["val_labels"] = d.val.labels;
        return out;
      },
      py::arg("source") = "synthetic", "Images normalized to [-1, 1].");

  m.def(
      "extract_patches",
      [](const Array& image, int stride) {
        if (image.ndim() != 2) throw ConfigError("image must be 2-D");
        const int h = static_cast<int>(image.shape(0));
        const int w = static_cast<int>(image.shape(1));
        const auto patches = data::extract_patches(to_vector(image), h, w, stride);
        py::array_t<double> out({static_cast<py::ssize_t>(patches.size()), py::ssize_t{4}});
        auto* p = out.mutable_data();
        for (const auto& patch : patches) p = std::copy(patch.begin(), patch.end(), p);
        return out;
      },
      py::arg("image"), py::arg("stride") = 2);

  m.def(
      "effective_dimension",
      [](const std::string& key, double gamma, std::int64_t n, int theta_samples, int data_samples,
         std::uint64_t seed, const std::string& map) {
        capacity::EDConfig cfg{gamma, n, theta_samples, data_samples, seed};
        capacity::validate(cfg);
        capacity::ProbabilityMap pm;
        if (map == "softmax") {
          pm = capacity::ProbabilityMap::Softmax;
        } else if (map == "born") {
          pm = capacity::ProbabilityMap::Born;
        } else {
          throw ConfigError("unknown probability map '" + map + "'");
        }
        const capacity::CircuitModel model(circuits::make_ansatz(key).deferred, pm);
        const auto r = capacity::effective_dimension(model, cfg, capacity::uniform_inputs(circuits::kPatchInputs));
        py::dict out;
        out["ed"] = r.ed;
        out["normalized_ed"] = r.normalized_ed;
        out["d"] = r.d;
        out["skipped"] = r.skipped;
        out["volume"] = r.volume;
        return out;
      },
      py::arg("key"), py::arg("gamma") = 1.0, py::arg("n") = 546, py::arg("theta_samples") = 100,
      py::arg("data_samples") = 100, py::arg("seed") = 0, py::arg("map") = "softmax");

  m.def(
      "train",
      [](const std::string& ansatz, const std::string& data, int epochs, int batch_size, double lr, int stride,
         std::vector<std::uint64_t> seeds, const std::filesystem::path& out_dir) {
        app::RunConfig cfg{ansatz, data, epochs, batch_size, lr, stride, false, std::move(seeds), out_dir};
        std::ostringstream log;
        app::TrainResult r;
        {
          py::gil_scoped_release release;
          r = app::cmd_train(cfg, log);
        }
        py::dict out;
        out["max_train_acc"] = stat_dict(r.summary.train);
        out["max_val_acc"] = stat_dict(r.summary.val);
        py::list epochs_out;
        for (const auto& run : r.runs) {
          for (const auto& e : run.metrics.epochs) {
            py::dict row;
            row["seed"] = run.seed;
            row["epoch"] = e.epoch;
            row["train_acc"] = e.train_acc;
            row["train_loss"] = e.train_loss;
            row["val_acc"] = e.val_acc;
            row["val_loss"] = e.val_loss;
            epochs_out.append(row);
          }
        }
        out["epochs"] = epochs_out;
        out["log"] = log.str();
        return out;
      },
      py::arg("ansatz") = "conv", py::arg("data") = "synthetic", py::arg("epochs") = 20, py::arg("batch_size") = 8,
      py::arg("lr") = 0.001, py::arg("stride") = 2, py::arg("seeds") = std::vector<std::uint64_t>{0, 1, 2},
      py::arg("out_dir") = "runs/run",
      "Runs the train command and returns the summary plus per-epoch metrics.");
}
