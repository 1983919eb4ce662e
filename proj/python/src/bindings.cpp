#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opca/batch_pca.hpp"
#include "opca/datasets.hpp"
#include "opca/errors.hpp"
#include "opca/experiment.hpp"
#include "opca/metrics.hpp"
#include "opca/oja_pca.hpp"

namespace py = pybind11;
using namespace opca;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) reject(InputErrorKind::dimension_mismatch, "expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return DenseMatrix(rows, cols, Vector(a.data(), a.data() + rows * cols));
}

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) reject(InputErrorKind::dimension_mismatch, "expected a 1-D array");
  return Vector(a.data(), a.data() + a.size());
}

Array from_matrix(const DenseMatrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array from_vector(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

// (B, C, H, W) or a single (H, W) plane.
ImageBatch to_images(const Array& a) {
  ImageBatch x;
  if (a.ndim() == 2) {
    x = ImageBatch(1, 1, a.shape(0), a.shape(1));
  } else if (a.ndim() == 4) {
    x = ImageBatch(a.shape(0), a.shape(1), a.shape(2), a.shape(3));
  } else {
    reject(InputErrorKind::dimension_mismatch, "expected a (B, C, H, W) or (H, W) array");
  }
  std::copy(a.data(), a.data() + a.size(), x.values.begin());
  return x;
}

Array from_images(const ImageBatch& x) {
  Array out({x.batch, x.channels, x.height, x.width});
  std::copy(x.values.begin(), x.values.end(), out.mutable_data());
  return out;
}

LearningRateSchedule make_schedule(const std::string& kind, double eta0, double decay) {
  if (kind == "constant") return {LearningRateSchedule::Kind::constant, eta0, decay};
  if (kind == "inverse_time") return {LearningRateSchedule::Kind::inverse_time, eta0, decay};
  reject("schedule must be 'constant' or 'inverse_time'");
}

OjaConfig make_config(const std::string& schedule, double eta0, double decay, double gamma,
                      std::uint64_t ortho_period, double eps_ortho, bool track_mean) {
  OjaConfig cfg;
  cfg.schedule = make_schedule(schedule, eta0, decay);
  cfg.gamma = gamma;
  cfg.ortho_period = ortho_period;
  cfg.eps_ortho = eps_ortho;
  cfg.track_mean = track_mean;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online-PCA bottleneck core";

  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      py::set_error(input_error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    }
  });

  // --- linear algebra ---
  m.def(
      "sym_eig",
      [](const Array& a, int max_sweeps, double tolerance) {
        const SymEigDecomposition d = sym_eig(to_matrix(a), {max_sweeps, tolerance});
        return py::make_tuple(from_vector(d.eigenvalues), from_matrix(d.eigenvectors));
      },
      py::arg("a"), py::arg("max_sweeps") = 100, py::arg("tolerance") = 1e-12,
      "Eigenvalues (descending) and eigenvectors (columns) of a symmetric matrix.");
  m.def(
      "inv_sqrt_sym", [](const Array& g, double eps) { return from_matrix(inv_sqrt_sym(to_matrix(g), eps)); },
      py::arg("g"), py::arg("eps") = 1e-8, "V diag(max(lambda, eps)^-1/2) V^T.");

  // --- running mean ---
  m.def("rho", &rho, py::arg("n"), py::arg("gamma"));
  py::class_<GammaFadeMean>(m, "GammaFadeMean")
      .def(py::init<std::size_t, double>(), py::arg("dimension"), py::arg("gamma") = 0.99)
      .def_property_readonly("mu", [](const GammaFadeMean& s) { return from_vector(s.mu); })
      .def_readonly("gamma", &GammaFadeMean::gamma)
      .def_readonly("step", &GammaFadeMean::step)
      .def("update", [](GammaFadeMean& s, const Array& batch_mean) {
        s = gamma_fade_update(s, to_vector(batch_mean));
      });
  m.def(
      "gamma_fade_direct",
      [](const Array& means, double gamma) {
        const DenseMatrix mm = to_matrix(means);
        std::vector<Vector> rows;
        for (std::size_t r = 0; r < mm.rows(); ++r) rows.emplace_back(mm.row(r).begin(), mm.row(r).end());
        return from_vector(gamma_fade_direct(rows, gamma));
      },
      py::arg("means"), py::arg("gamma"), "Weighted mean of the rows of `means`, oldest first.");

  // --- online PCA ---
  py::class_<OjaPcaState>(m, "OjaPca")
      .def(py::init([](std::size_t input_dim, std::size_t num_components, std::uint64_t seed, double eta0,
                       const std::string& schedule, double decay, double gamma, std::uint64_t ortho_period,
                       double eps_ortho, bool track_mean) {
             return init_state(input_dim, num_components, seed,
                               make_config(schedule, eta0, decay, gamma, ortho_period, eps_ortho, track_mean));
           }),
           py::arg("input_dim"), py::arg("num_components"), py::arg("seed") = 0, py::arg("eta0") = 0.01,
           py::arg("schedule") = "constant", py::arg("decay") = 0.0, py::arg("gamma") = 0.99,
           py::arg("ortho_period") = 1, py::arg("eps_ortho") = 1e-8, py::arg("track_mean") = true)
      .def_static(
          "from_basis",
          [](const Array& basis, double eta0, const std::string& schedule, double decay, double gamma,
             std::uint64_t ortho_period, double eps_ortho, bool track_mean) {
            return make_state(to_matrix(basis),
                              make_config(schedule, eta0, decay, gamma, ortho_period, eps_ortho, track_mean));
          },
          py::arg("basis"), py::arg("eta0") = 0.01, py::arg("schedule") = "constant", py::arg("decay") = 0.0,
          py::arg("gamma") = 0.99, py::arg("ortho_period") = 1, py::arg("eps_ortho") = 1e-8,
          py::arg("track_mean") = true)
      .def_property_readonly("basis", [](const OjaPcaState& s) { return from_matrix(s.basis); })
      .def_property_readonly("mean", [](const OjaPcaState& s) { return from_vector(s.center()); })
      .def_readonly("steps_taken", &OjaPcaState::steps_taken)
      .def_property_readonly("input_dim", &OjaPcaState::input_dim)
      .def_property_readonly("num_components", &OjaPcaState::num_components)
      .def(
          "step",
          [](OjaPcaState& s, const Array& batch) {
            const OjaStepTrace t = oja_step(s, to_matrix(batch));
            py::dict d;
            d["projected"] = from_matrix(t.projected);
            d["gram"] = from_matrix(t.gram);
            d["delta_norm"] = t.delta_norm;
            d["eta_used"] = t.eta_used;
            d["drift"] = t.drift;
            d["reorthonormalized"] = t.reorthonormalized;
            return d;
          },
          py::arg("batch"), "One minibatch update (rows are samples); returns the step trace.")
      .def("project", [](const OjaPcaState& s, const Array& z) { return from_vector(project(s, to_vector(z))); })
      .def("reconstruct",
           [](const OjaPcaState& s, const Array& y) { return from_vector(reconstruct(s, to_vector(y))); })
      .def("quantize", [](const OjaPcaState& s, const Array& z) { return from_vector(quantize(s, to_vector(z))); })
      .def("reorthonormalize", [](OjaPcaState& s) { reorthonormalize(s); })
      .def("explained_variance",
           [](const OjaPcaState& s, const Array& data) { return from_vector(explained_variance(s, to_matrix(data))); })
      .def("sort_components",
           [](const OjaPcaState& s, const Array& data) { return sort_components(s, to_matrix(data)); })
      .def("truncate", [](const OjaPcaState& s, std::size_t k) { return truncate(s, k); });

  // --- batch PCA oracle ---
  m.def(
      "batch_pca",
      [](const Array& data, std::size_t q) {
        const SpectrumEstimate e = batch_pca(to_matrix(data), q);
        py::dict d;
        d["covariance"] = from_matrix(e.covariance);
        d["eigenvalues"] = from_vector(e.eigenvalues);
        d["eigenvectors"] = from_matrix(e.eigenvectors);
        d["mean"] = from_vector(e.sample_mean);
        return d;
      },
      py::arg("data"), py::arg("q"));
  m.def(
      "sample_covariance", [](const Array& data) { return from_matrix(sample_covariance(to_matrix(data))); },
      py::arg("data"));
  m.def(
      "principal_angles",
      [](const Array& a, const Array& b) { return from_vector(principal_angles(to_matrix(a), to_matrix(b))); },
      py::arg("a"), py::arg("b"));
  m.def(
      "reconstruction_mse", [](const Array& c, const Array& data) { return reconstruction_mse(to_matrix(c), to_matrix(data)); },
      py::arg("basis"), py::arg("data"));

  // --- metrics ---
  m.def(
      "bit_budget_continuous",
      [](std::uint64_t tokens, std::uint64_t channels, std::uint64_t bits) {
        return bit_budget(BitBudgetSpec::continuous(tokens, channels, bits));
      },
      py::arg("tokens"), py::arg("channels"), py::arg("bits_per_value") = 32);
  m.def(
      "bit_budget_discrete",
      [](std::uint64_t tokens, std::uint64_t codebook_size, bool ceil_per_token) {
        return bit_budget(BitBudgetSpec::discrete(tokens, codebook_size), ceil_per_token);
      },
      py::arg("tokens"), py::arg("codebook_size"), py::arg("ceil_per_token") = false);
  m.def(
      "budget_table",
      [](const std::vector<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>>& continuous,
         const std::vector<std::pair<std::uint64_t, std::uint64_t>>& discrete, bool ceil_per_token) {
        std::vector<BitBudgetSpec> specs;
        for (const auto& [n, k, b] : continuous) specs.push_back(BitBudgetSpec::continuous(n, k, b));
        for (const auto& [n, kk] : discrete) specs.push_back(BitBudgetSpec::discrete(n, kk));
        return budget_table(specs, ceil_per_token);
      },
      py::arg("continuous") = std::vector<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>>{},
      py::arg("discrete") = std::vector<std::pair<std::uint64_t, std::uint64_t>>{},
      py::arg("ceil_per_token") = false, "CSV table as printed by `opca budget`.");
  m.def(
      "psnr", [](const Array& x_hat, const Array& x, double peak) { return psnr(to_images(x_hat), to_images(x), peak); },
      py::arg("x_hat"), py::arg("x"), py::arg("peak") = 1.0);
  m.def(
      "ssim", [](const Array& x_hat, const Array& x, double peak) { return ssim(to_images(x_hat), to_images(x), peak); },
      py::arg("x_hat"), py::arg("x"), py::arg("peak") = 1.0);

  // --- datasets ---
  m.def(
      "gen_gaussian_lowrank",
      [](std::size_t dimension, const Array& spectrum, std::size_t count, std::uint64_t seed,
         std::optional<Array> mean) {
        GaussianLowRankSpec spec{dimension, to_vector(spectrum), mean ? to_vector(*mean) : Vector{}, count, seed};
        const LowRankDataset ds = gen_gaussian_lowrank(spec);
        py::dict d;
        d["samples"] = from_matrix(ds.samples);
        d["basis"] = from_matrix(ds.basis);
        d["spectrum"] = from_vector(ds.spectrum);
        d["mean"] = from_vector(ds.mean);
        d["covariance"] = from_matrix(ds.covariance());
        return d;
      },
      py::arg("dimension"), py::arg("spectrum"), py::arg("count"), py::arg("seed") = 0, py::arg("mean") = py::none());
  m.def(
      "gen_toy_shapes",
      [](std::size_t image_size, std::size_t count, std::uint64_t seed, const std::string& shape) {
        ToyShape s;
        if (shape == "disc") {
          s = ToyShape::disc;
        } else if (shape == "rectangle") {
          s = ToyShape::rectangle;
        } else {
          reject("shape must be 'disc' or 'rectangle'");
        }
        const ToyShapesDataset ds = gen_toy_shapes({image_size, count, seed, s});
        return py::make_tuple(from_images(ds.images), from_matrix(ds.factors));
      },
      py::arg("image_size") = 16, py::arg("count") = 64, py::arg("seed") = 0, py::arg("shape") = "disc",
      "(images (B, 1, H, W), factors (B, 3): x_position, radius, brightness)");
}
