#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sopbound/config.hpp"
#include "sopbound/error.hpp"
#include "sopbound/experiments.hpp"
#include "sopbound/pencil.hpp"
#include "sopbound/policy.hpp"
#include "sopbound/possibilistic.hpp"
#include "sopbound/projection.hpp"
#include "sopbound/volume.hpp"

namespace py = pybind11;
using namespace sopbound;

namespace {

pencil::MatrixPencil make_pencil(const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& a) {
  return pencil::MatrixPencil(b, a);
}

possibilistic::Subset mask_of(const std::vector<std::size_t>& members) {
  possibilistic::Subset mask = 0;
  for (std::size_t s : members) {
    if (s >= 64) throw DomainError("state index out of range");
    mask |= possibilistic::Subset{1} << s;
  }
  return mask;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Secrecy-outage bounds: contour counting, projection, volume and policy kernels.";
  m.attr("__version__") = experiments::kToolVersion;

  // Translators run newest first, so the base class goes in first.
  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<DomainError> domain_error(m, "DomainError", error.ptr());
  static py::exception<DimensionError> dimension_error(m, "DimensionError", error.ptr());
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  static py::exception<NumericalError> numerical_error(m, "NumericalError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    } catch (const DimensionError& e) {
      py::set_error(dimension_error, e.what());
    } catch (const DomainError& e) {
      py::set_error(domain_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  // pencil
  m.def(
      "count_eigs",
      [](const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& a, std::complex<double> center, double radius,
         int nodes) {
        const auto r = pencil::count_eigs_contour(make_pencil(b, a), pencil::Contour::circle(center, radius, nodes));
        return py::make_tuple(r.count, r.residual, r.nodes_used);
      },
      py::arg("b"), py::arg("a"), py::arg("center") = std::complex<double>{0.0, 0.0}, py::arg("radius") = 1.0,
      py::arg("nodes") = 128,
      "Number of generalized eigenvalues of (B, A) inside a circle, as (count, residual, nodes_used).");
  m.def(
      "direct_eigs",
      [](const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& a) {
        return pencil::direct_eig_oracle(make_pencil(b, a));
      },
      py::arg("b"), py::arg("a"));
  m.def(
      "davis_kahan",
      [](const Eigen::MatrixXd& m0, const Eigen::MatrixXd& m1, Eigen::Index index) {
        const auto r = pencil::davis_kahan_check(m0, m1, index);
        return py::dict(py::arg("sin_angle") = r.sin_angle, py::arg("bound") = r.bound, py::arg("gap") = r.gap,
                        py::arg("perturbation_norm") = r.perturbation_norm, py::arg("holds") = r.holds);
      },
      py::arg("m0"), py::arg("m1"), py::arg("index"));

  // projection
  py::class_<projection::ProjectionBounds>(m, "ProjectionBounds")
      .def(py::init([](double lo, double hi, double eta) {
             projection::ProjectionBounds b{lo, hi, eta};
             b.validate();
             return b;
           }),
           py::arg("theta_min") = -1.0, py::arg("theta_max") = 1.0, py::arg("eta") = 0.1)
      .def_readonly("theta_min", &projection::ProjectionBounds::theta_min)
      .def_readonly("theta_max", &projection::ProjectionBounds::theta_max)
      .def_readonly("eta", &projection::ProjectionBounds::eta);
  m.def("f_margin", &projection::f_margin, py::arg("theta"), py::arg("bounds"));
  m.def("proj", &projection::proj, py::arg("theta"), py::arg("big_theta"), py::arg("bounds"));
  m.def(
      "proj_matrix",
      [](const Eigen::MatrixXd& theta, const Eigen::MatrixXd& big, const projection::ProjectionBounds& b) {
        return projection::proj_matrix(theta, big, b);
      },
      py::arg("theta"), py::arg("big_theta"), py::arg("bounds"));
  m.def("jl_analytic_bound", &projection::jl_analytic_bound, py::arg("k"), py::arg("tau2"));

  // volume
  m.def(
      "volume_of", [](const std::vector<double>& s) { return volume::volume_of(s).volume; }, py::arg("samples"),
      "exp of the m-spacing entropy estimate.");
  m.def(
      "empirical_sop",
      [](std::vector<double> s, double lambda) {
        return volume::empirical_sop(volume::EmpiricalDistribution(std::move(s)), lambda);
      },
      py::arg("samples"), py::arg("lam"));
  m.def(
      "chernoff_relation",
      [](std::vector<double> s, double t, double lambda) {
        const auto r = volume::chernoff_relation(volume::EmpiricalDistribution(std::move(s)), t, lambda);
        return py::make_tuple(r.lhs, r.rhs, r.holds);
      },
      py::arg("samples"), py::arg("t"), py::arg("lam"));

  // policy
  m.def(
      "value_iteration",
      [](const std::vector<Eigen::MatrixXd>& kernel, const Eigen::MatrixXd& reward, double discount) {
        policy::MdpSpec spec;
        spec.n_states = static_cast<int>(reward.rows());
        spec.n_actions = static_cast<int>(reward.cols());
        spec.kernel = kernel;
        spec.reward = reward;
        spec.discount = discount;
        return policy::value_iteration_oracle(spec);
      },
      py::arg("kernel"), py::arg("reward"), py::arg("discount"),
      "Q* for kernel[s][a, s'] and reward[s, a].");

  // possibilistic
  m.def(
      "possibility_of",
      [](std::vector<double> v, const std::vector<std::size_t>& subset) {
        return possibilistic::possibility_of(possibilistic::PossibilityDistribution(std::move(v)), mask_of(subset));
      },
      py::arg("values"), py::arg("subset"));
  m.def(
      "necessity_of",
      [](std::vector<double> v, const std::vector<std::size_t>& subset) {
        return possibilistic::necessity_of(possibilistic::PossibilityDistribution(std::move(v)), mask_of(subset));
      },
      py::arg("values"), py::arg("subset"));
  m.def(
      "max_chain",
      [](const Eigen::MatrixXd& k32, const Eigen::MatrixXd& k21) {
        return possibilistic::max_chain(possibilistic::PossibilisticKernel(k32), possibilistic::PossibilisticKernel(k21))
            .table();
      },
      py::arg("k32"), py::arg("k21"));

  // experiments
  m.def("experiment_kinds", &config::experiment_kinds);
  m.def("schema_text", &config::schema_text, py::arg("kind"));
  m.def(
      "run_experiment",
      [](const std::string& config_text, std::optional<std::uint64_t> seed) {
        std::istringstream in(config_text);
        const auto cfg = config::resolve(config::parse(in), std::nullopt, seed);
        std::vector<experiments::OutputFile> files;
        {
          py::gil_scoped_release release;
          files = experiments::run_experiment(cfg);
        }
        py::dict out;
        for (const auto& f : files) out[py::str(f.name)] = py::str(f.content);
        return out;
      },
      py::arg("config_text"), py::arg("seed") = py::none(),
      "Runs one experiment from config text; returns {file name: contents}.");
}
