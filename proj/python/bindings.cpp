#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rigidity/continuation.hpp"
#include "rigidity/diagnostics.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/io.hpp"
#include "rigidity/newton.hpp"
#include "rigidity/scalar_model.hpp"

namespace py = pybind11;
using namespace rigidity;

namespace {

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Eigen::MatrixX2d node_array(const Mesh& mesh) {
  Eigen::MatrixX2d out(static_cast<Eigen::Index>(mesh.num_nodes()), 2);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = mesh.nodes[i].x;
    out(static_cast<Eigen::Index>(i), 1) = mesh.nodes[i].y;
  }
  return out;
}

Eigen::MatrixX3i triangle_array(const Mesh& mesh) {
  Eigen::MatrixX3i out(static_cast<Eigen::Index>(mesh.triangles.size()), 3);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) out(static_cast<Eigen::Index>(t), k) = mesh.triangles[t][static_cast<std::size_t>(k)];
  }
  return out;
}

NewtonOptions newton_options(double tol, int max_iter) {
  NewtonOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return opts;
}

MultiStartOptions multi_options(int n_starts, unsigned long seed, int threads, double q) {
  MultiStartOptions opts;
  opts.n_starts = n_starts;
  opts.seed = seed;
  opts.threads = threads;
  opts.q = q;
  return opts;
}

py::dict sweep_row(const SweepRow& r) {
  py::dict d;
  d["epsilon"] = r.epsilon;
  d["n_distinct"] = r.n_distinct;
  d["any_nonconstant"] = r.any_nonconstant;
  d["n_converged"] = r.n_converged;
  d["n_failed"] = r.n_failed;
  d["max_sup_norm"] = r.max_sup_norm;
  d["max_exp_integral"] = r.max_exp_integral;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Steady states of -eps Lap(u) = e^u - 1 - a u with Neumann boundary conditions";

  // Kept alive for the lifetime of the interpreter.
  static PyObject* numerical = PyErr_NewException("rigidity._core.NumericalError", PyExc_RuntimeError, nullptr);
  m.attr("NumericalError") = py::handle(numerical);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const NumericalError& e) {
      py::gil_scoped_acquire gil;
      py::object inst = py::reinterpret_borrow<py::object>(numerical)(e.what());
      inst.attr("kind") = to_string(e.kind());
      inst.attr("last_residual") = e.last_residual();
      PyErr_SetObject(numerical, inst.ptr());
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    }
  });

  m.def("eval_f", &eval_f, py::arg("t"), py::arg("a"));
  m.def("eval_f_prime", &eval_f_prime, py::arg("t"), py::arg("a"));
  m.def("find_xi", &find_xi, py::arg("a"), py::arg("tol") = 1e-14, "Positive root of e^t - 1 - a t.");
  m.def("min_depth_c0", &min_depth_c0, py::arg("a"));
  m.def("lipschitz_k", &lipschitz_k, py::arg("M"), py::arg("a"));
  m.def("bifurcation_epsilon", &bifurcation_epsilon, py::arg("a"), py::arg("mu"));
  m.def(
      "constant_chain",
      [](double a, double q, double area, double diameter) { return to_py(to_json(constant_chain(a, q, area, diameter))); },
      py::arg("a"), py::arg("q"), py::arg("area"), py::arg("diameter"));

  py::class_<DiscreteOperator>(m, "Operator")
      .def_property_readonly("nodes", [](const DiscreteOperator& op) { return node_array(op.mesh); })
      .def_property_readonly("triangles", [](const DiscreteOperator& op) { return triangle_array(op.mesh); })
      .def_property_readonly("boundary_nodes", [](const DiscreteOperator& op) { return op.mesh.boundary_nodes; })
      .def_readonly("lumped_mass", &DiscreteOperator::lumped_mass)
      .def_readonly("area", &DiscreteOperator::area)
      .def_readonly("diameter", &DiscreteOperator::diameter)
      .def_readonly("h", &DiscreteOperator::h)
      .def_property_readonly("size", &DiscreteOperator::size)
      .def("stiffness", [](const DiscreteOperator& op) { return Eigen::SparseMatrix<double>(op.stiffness.matrix()); })
      .def("apply_stiffness", [](const DiscreteOperator& op, const Vec& x) {
        if (x.size() != op.size()) throw ValidationError("vector length does not match operator");
        return Vec(op.stiffness * x);
      });

  m.def("rectangle", [](int nx, int ny, double lx, double ly) { return assemble(build_rectangle_mesh(nx, ny, lx, ly)); },
        py::arg("nx"), py::arg("ny"), py::arg("lx") = 1.0, py::arg("ly") = 1.0);
  m.def("disk", [](int refinement, double radius) { return assemble(build_disk_mesh(refinement, radius)); },
        py::arg("refinement"), py::arg("radius") = 1.0);
  m.def("read_mesh", [](const std::string& path) { return assemble(read_mesh_file(path)); }, py::arg("path"));

  py::class_<EigenPair>(m, "EigenPair")
      .def_readonly("mu1", &EigenPair::mu1)
      .def_readonly("phi1", &EigenPair::phi1)
      .def_readonly("mu2", &EigenPair::mu2)
      .def_readonly("degenerate", &EigenPair::degenerate)
      .def_readonly("multiplicity", &EigenPair::multiplicity);
  m.def("first_mode", &first_mode, py::arg("op"), py::arg("tol") = 1e-11);
  m.def("project_mean_zero", &project_mean_zero, py::arg("x"), py::arg("m"));

  py::class_<SolutionRecord>(m, "Solution")
      .def_readonly("u", &SolutionRecord::u)
      .def_readonly("epsilon", &SolutionRecord::epsilon)
      .def_readonly("a", &SolutionRecord::a)
      .def_readonly("residual_norm", &SolutionRecord::residual_norm)
      .def_readonly("newton_iters", &SolutionRecord::newton_iters)
      .def_readonly("mean", &SolutionRecord::mean)
      .def_readonly("sup_fluct", &SolutionRecord::sup_fluct)
      .def_property_readonly("is_constant", [](const SolutionRecord& r) { return is_constant(r.classification); })
      .def_property_readonly("classification", [](const SolutionRecord& r) { return classification_name(r.classification); })
      .def_property_readonly("diagnostics", [](const SolutionRecord& r) -> py::object {
        return r.diagnostics ? to_py(to_json(*r.diagnostics)) : py::none();
      })
      .def("to_dict", [](const SolutionRecord& r) { return to_py(to_json(r)); });

  m.def("residual", [](const Vec& u, double eps, double a, const DiscreteOperator& op) { return residual(u, eps, a, op).r; },
        py::arg("u"), py::arg("eps"), py::arg("a"), py::arg("op"));
  m.def("jacobian", [](const Vec& u, double eps, double a, const DiscreteOperator& op) {
        return Eigen::SparseMatrix<double>(jacobian(u, eps, a, op).matrix());
      }, py::arg("u"), py::arg("eps"), py::arg("a"), py::arg("op"));
  m.def("newton_solve",
        [](const Vec& u0, double eps, double a, const DiscreteOperator& op, double tol, int max_iter) {
          py::gil_scoped_release release;
          return newton_solve(u0, eps, a, op, newton_options(tol, max_iter));
        },
        py::arg("u0"), py::arg("eps"), py::arg("a"), py::arg("op"), py::arg("tol") = -1.0, py::arg("max_iter") = 100);
  m.def("multi_start",
        [](double eps, double a, const DiscreteOperator& op, int n_starts, unsigned long seed, int threads, double q) {
          MultiStartResult r;
          {
            py::gil_scoped_release release;
            r = multi_start(eps, a, op, multi_options(n_starts, seed, threads, q));
          }
          return r.solutions;
        },
        py::arg("eps"), py::arg("a"), py::arg("op"), py::arg("n_starts") = 50, py::arg("seed") = 1,
        py::arg("threads") = 1, py::arg("q") = 4.0, "Distinct solutions from the seeded start family.");
  m.def("run_diagnostics",
        [](const Vec& u, double eps, double a, const DiscreteOperator& op, double q, std::optional<double> mu1) {
          const auto tol = DiagnosticsTolerances::from_newton_tol(NewtonOptions{}.resolved_tol(op));
          return to_py(to_json(run_diagnostics(u, eps, a, q, op, tol, mu1)));
        },
        py::arg("u"), py::arg("eps"), py::arg("a"), py::arg("op"), py::arg("q") = 4.0, py::arg("mu1") = py::none());
  m.def("estimate_green_constants",
        [](const DiscreteOperator& op, int samples, unsigned seed) { return to_py(to_json(estimate_green_constants(op, samples, seed))); },
        py::arg("op"), py::arg("samples") = 8, py::arg("seed") = 1);

  m.def("stability_indicator", &stability_indicator, py::arg("u"), py::arg("eps"), py::arg("a"), py::arg("op"),
        py::arg("tol") = 1e-12);
  m.def("detect_bifurcation", &detect_bifurcation, py::arg("a"), py::arg("op"), py::arg("eps_lo"), py::arg("eps_hi"),
        py::arg("tol") = 1e-10);
  m.def("branch_switch",
        [](double eps_star, double a, const DiscreteOperator& op, double amplitude, const Vec& phi1, double delta) {
          BranchSwitchOptions opts;
          opts.delta = delta;
          return branch_switch(eps_star, a, op, amplitude, phi1, opts);
        },
        py::arg("eps_star"), py::arg("a"), py::arg("op"), py::arg("amplitude"), py::arg("phi1"), py::arg("delta") = 0.05);
  m.def("continue_branch",
        [](const SolutionRecord& start, const std::vector<double>& schedule, const DiscreteOperator& op) {
          py::list out;
          for (const auto& pt : continue_branch(start, schedule, op)) {
            out.append(py::make_tuple(pt.epsilon, pt.solution, pt.stability_indicator));
          }
          return out;
        },
        py::arg("start"), py::arg("schedule"), py::arg("op"), "List of (epsilon, solution, stability_indicator).");
  m.def("rigidity_sweep",
        [](const std::vector<double>& grid, double a, const DiscreteOperator& op, int n_starts, unsigned long seed,
           int threads) {
          SweepResult r;
          {
            py::gil_scoped_release release;
            r = rigidity_sweep(grid, a, op, multi_options(n_starts, seed, threads, 4.0));
          }
          py::dict d;
          py::list rows;
          for (const auto& row : r.rows) rows.append(sweep_row(row));
          d["rows"] = rows;
          d["empirical_threshold"] = r.empirical_threshold ? py::cast(*r.empirical_threshold) : py::none();
          d["threshold_uncertainty"] = r.threshold_uncertainty;
          d["mu1"] = r.mu1;
          d["m_emp"] = r.m_emp;
          d["threshold_of_m_emp"] = r.threshold_of_m_emp;
          return d;
        },
        py::arg("eps_grid"), py::arg("a"), py::arg("op"), py::arg("n_starts") = 50, py::arg("seed") = 1,
        py::arg("threads") = 1);
}
