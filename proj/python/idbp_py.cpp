#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "idbp/bench.hpp"
#include "idbp/denoisers.hpp"
#include "idbp/operators.hpp"
#include "idbp/solvers.hpp"
#include "idbp/verify.hpp"

namespace py = pybind11;
using namespace idbp;

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

ImageGrid to_grid(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  ImageGrid g(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), g.pixels().begin());
  return g;
}

Array to_array(const ImageGrid& g) {
  Array a({g.height(), g.width()});
  std::copy(g.pixels().begin(), g.pixels().end(), a.mutable_data());
  return a;
}

std::optional<ImageGrid> maybe_grid(const std::optional<Array>& a) {
  if (!a) return std::nullopt;
  return to_grid(*a);
}

std::unique_ptr<Denoiser> build_denoiser(const std::string& kind, const std::string& external_cmd,
                                         const std::optional<ImageGrid>& truth, double alpha,
                                         double gamma) {
  DenoiserSpec spec;
  spec.kind = parse_denoiser_kind(kind);
  spec.external_command = external_cmd;
  spec.oracle_alpha = alpha;
  spec.shrink_gamma = gamma;
  if (truth) spec.truth = std::make_shared<const ImageGrid>(*truth);
  return make_denoiser(spec);
}

py::dict trace_dict(const IterationTrace& trace) {
  const auto n = static_cast<py::ssize_t>(trace.records.size());
  py::array_t<long long> iter(n);
  py::array_t<long long> restarts(n);
  Array psnr_db(n);
  Array ratio(n);
  Array eps(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    const IterationRecord& r = trace.records[static_cast<std::size_t>(i)];
    iter.mutable_at(i) = static_cast<long long>(r.iteration);
    restarts.mutable_at(i) = static_cast<long long>(r.restarts);
    psnr_db.mutable_at(i) = r.psnr_db;
    ratio.mutable_at(i) = r.condition_ratio;
    eps.mutable_at(i) = r.epsilon;
  }
  py::dict d;
  d["iter"] = iter;
  d["psnr_db"] = psnr_db;
  d["condition_ratio"] = ratio;
  d["epsilon"] = eps;
  d["restarts"] = restarts;
  d["total_restarts"] = trace.restarts;
  d["final_epsilon"] = trace.final_epsilon;
  return d;
}

py::tuple result_tuple(const SolverResult& r) {
  return py::make_tuple(to_array(r.estimate), trace_dict(r.trace));
}

}  // namespace

PYBIND11_MODULE(_idbp, m) {
  m.doc() = "Iterative denoising and backward projections for inpainting and deblurring";

  py::register_exception<BridgeError>(m, "BridgeError", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  m.def("load_pgm", [](const std::filesystem::path& p) { return to_array(load_pgm(p)); }, py::arg("path"));
  m.def("save_pgm", [](const std::filesystem::path& p, const Array& img) { save_pgm(to_grid(img), p); },
        py::arg("path"), py::arg("image"));
  m.def("psnr", [](const Array& ref, const Array& est) { return psnr(to_grid(ref), to_grid(est)); },
        py::arg("reference"), py::arg("estimate"));
  m.def("bsnr", [](const Array& blurred, double sigma_n) { return bsnr(to_grid(blurred), sigma_n); },
        py::arg("blurred_clean"), py::arg("sigma_n"));
  m.def("add_gaussian_noise",
        [](const Array& x, double sigma_n, std::uint64_t seed) {
          RngState rng{seed, 0};
          return to_array(add_gaussian_noise(to_grid(x), sigma_n, rng));
        },
        py::arg("x"), py::arg("sigma_n"), py::arg("seed") = 0);

  m.def("denoise",
        [](const Array& z, double sigma, const std::string& kind, const std::string& external_cmd) {
          return to_array(build_denoiser(kind, external_cmd, std::nullopt, 0.5, 0.01)->denoise(to_grid(z), sigma));
        },
        py::arg("z"), py::arg("sigma"), py::arg("kind") = "dct", py::arg("external_cmd") = "");

  py::class_<DegradationOperator, std::shared_ptr<DegradationOperator>>(m, "DegradationOperator")
      .def_property_readonly("shape", [](const DegradationOperator& op) {
        return py::make_tuple(op.height(), op.width());
      })
      .def("forward", [](const DegradationOperator& op, const Array& x) { return to_array(op.forward(to_grid(x))); })
      .def("pseudoinverse", [](const DegradationOperator& op, const Array& y) { return to_array(op.pseudoinverse(to_grid(y))); })
      .def("project_null", [](const DegradationOperator& op, const Array& x) { return to_array(op.project_null(to_grid(x))); })
      .def("project_row", [](const DegradationOperator& op, const Array& x) { return to_array(op.project_row(to_grid(x))); })
      .def("back_project", [](const DegradationOperator& op, const Array& y, const Array& x) {
        return to_array(op.back_project(op.pseudoinverse(to_grid(y)), to_grid(x)));
      }, py::arg("y"), py::arg("x"));

  py::class_<InpaintingOperator, DegradationOperator, std::shared_ptr<InpaintingOperator>>(m, "InpaintingOperator")
      .def(py::init([](const py::array_t<bool, py::array::c_style | py::array::forcecast>& mask) {
             if (mask.ndim() != 2) throw std::invalid_argument("mask must be 2-D");
             std::vector<bool> bits(mask.data(), mask.data() + mask.size());
             return std::make_shared<InpaintingOperator>(static_cast<std::size_t>(mask.shape(0)),
                                                         static_cast<std::size_t>(mask.shape(1)), bits);
           }),
           py::arg("observed"))
      .def_static("random", [](std::size_t h, std::size_t w, double missing_fraction, std::uint64_t seed) {
             RngState rng{seed, 0};
             return std::make_shared<InpaintingOperator>(generate_random_mask(h, w, missing_fraction, rng));
           },
           py::arg("height"), py::arg("width"), py::arg("missing_fraction"), py::arg("seed") = 0)
      .def_property_readonly("observed", [](const InpaintingOperator& op) {
        py::array_t<bool> a({op.height(), op.width()});
        for (std::size_t i = 0; i < op.mask().size(); ++i) a.mutable_data()[i] = op.observed(i);
        return a;
      });

  py::class_<BlurOperator, DegradationOperator, std::shared_ptr<BlurOperator>>(m, "BlurOperator")
      .def(py::init([](const Array& kernel, std::size_t h, std::size_t w, double epsilon, double sigma_n) {
             if (kernel.ndim() != 2) throw std::invalid_argument("kernel must be 2-D");
             BlurKernel k{static_cast<std::size_t>(kernel.shape(0)), static_cast<std::size_t>(kernel.shape(1)),
                          std::vector<double>(kernel.data(), kernel.data() + kernel.size())};
             return std::make_shared<BlurOperator>(k, h, w, epsilon, sigma_n);
           }),
           py::arg("kernel"), py::arg("height"), py::arg("width"), py::arg("epsilon") = 0.0,
           py::arg("sigma_n") = 0.0)
      .def_property_readonly("epsilon", &BlurOperator::epsilon);

  m.def("scenario_kernel", [](int id) {
    const BlurKernel k = generate_scenario_kernel(id);
    Array a({k.rows, k.cols});
    std::copy(k.values.begin(), k.values.end(), a.mutable_data());
    return a;
  }, py::arg("scenario"));

  m.def("condition_ratio",
        [](const DegradationOperator& op, const Array& y, const Array& x, double sigma_n, double delta) {
          return condition_ratio(op, to_grid(y), to_grid(x), sigma_n, delta);
        },
        py::arg("op"), py::arg("y"), py::arg("x_tilde"), py::arg("sigma_n"), py::arg("delta"));

  m.def("median_initialize", [](const InpaintingOperator& op, const Array& y) {
    return to_array(median_initialize(op, to_grid(y)));
  }, py::arg("op"), py::arg("y"));

  m.def("idbp",
        [](const DegradationOperator& op, const Array& y, double sigma_n, double delta,
           std::size_t iterations, const std::string& output, const std::string& denoiser,
           const std::optional<Array>& init, const std::optional<Array>& truth,
           const std::string& external_cmd, double oracle_alpha, double shrink_gamma) {
          IdbpConfig cfg;
          cfg.delta = delta;
          cfg.iterations = iterations;
          if (output == "last_y") {
            cfg.output_mode = OutputMode::last_y;
          } else if (output != "last_x") {
            throw std::invalid_argument("output must be 'last_x' or 'last_y'");
          }
          const ImageGrid yg = to_grid(y);
          const auto t = maybe_grid(truth);
          const auto d = build_denoiser(denoiser, external_cmd, t, oracle_alpha, shrink_gamma);
          const ImageGrid start = init ? to_grid(*init) : yg;
          py::gil_scoped_release release;
          return idbp_run(op, yg, sigma_n, *d, cfg, start, t ? &*t : nullptr);
        },
        py::arg("op"), py::arg("y"), py::arg("sigma_n"), py::arg("delta") = 0.0,
        py::arg("iterations") = 75, py::arg("output") = "last_x", py::arg("denoiser") = "dct",
        py::arg("init") = py::none(), py::arg("truth") = py::none(), py::arg("external_cmd") = "",
        py::arg("oracle_alpha") = 0.5, py::arg("shrink_gamma") = 0.01);

  m.def("idbp_auto",
        [](const BlurOperator& op, const Array& y, double sigma_n, double delta, double epsilon,
           double tau, double eps_increment, std::size_t iterations, const std::string& denoiser,
           const std::optional<Array>& truth, const std::string& external_cmd) {
          IdbpConfig cfg = auto_tuned_defaults();
          cfg.delta = delta;
          cfg.epsilon = epsilon;
          cfg.condition_margin_tau = tau;
          cfg.epsilon_increment = eps_increment;
          cfg.iterations = iterations;
          const ImageGrid yg = to_grid(y);
          const auto t = maybe_grid(truth);
          const auto d = build_denoiser(denoiser, external_cmd, t, 0.5, 0.01);
          py::gil_scoped_release release;
          return idbp_auto_tuned(op, yg, sigma_n, *d, cfg, yg, t ? &*t : nullptr);
        },
        py::arg("op"), py::arg("y"), py::arg("sigma_n"), py::arg("delta") = 5.0,
        py::arg("epsilon") = 1e-3, py::arg("tau") = 3.0, py::arg("eps_increment") = 1e-4,
        py::arg("iterations") = 30, py::arg("denoiser") = "dct", py::arg("truth") = py::none(),
        py::arg("external_cmd") = "");

  m.def("pnp",
        [](const DegradationOperator& op, const Array& y, double sigma_n, double beta, double lam,
           std::size_t iterations, const std::string& denoiser, const std::optional<Array>& init,
           const std::optional<Array>& truth, const std::string& external_cmd, double shrink_gamma) {
          PnpConfig cfg;
          cfg.beta = beta;
          cfg.lambda = lam;
          cfg.iterations = iterations;
          const ImageGrid yg = to_grid(y);
          const auto t = maybe_grid(truth);
          const auto d = build_denoiser(denoiser, external_cmd, t, 0.5, shrink_gamma);
          const ImageGrid start = init ? to_grid(*init) : yg;
          py::gil_scoped_release release;
          return pnp_run(op, yg, sigma_n, *d, cfg, start, t ? &*t : nullptr);
        },
        py::arg("op"), py::arg("y"), py::arg("sigma_n"), py::arg("beta") = 1.0,
        py::arg("lam") = 10.0 / 255.0, py::arg("iterations") = 150, py::arg("denoiser") = "dct",
        py::arg("init") = py::none(), py::arg("truth") = py::none(), py::arg("external_cmd") = "",
        py::arg("shrink_gamma") = 0.01);

  m.def("verify", [](std::uint64_t seed, std::size_t instances) {
    py::list out;
    for (const CheckResult& r : run_verification(seed, instances)) {
      out.append(py::make_tuple(r.name, r.passed, r.detail));
    }
    return out;
  }, py::arg("seed") = 0, py::arg("instances") = 200);

  py::class_<SolverResult>(m, "SolverResult")
      .def_property_readonly("estimate", [](const SolverResult& r) { return to_array(r.estimate); })
      .def_property_readonly("trace", [](const SolverResult& r) { return trace_dict(r.trace); })
      .def("__iter__", [](const SolverResult& r) { return py::iter(result_tuple(r)); });
}
