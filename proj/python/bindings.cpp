#include "hymem/cli.hpp"
#include "hymem/config.hpp"
#include "hymem/errors.hpp"
#include "hymem/examples.hpp"
#include "hymem/numerics.hpp"
#include "hymem/report.hpp"
#include "hymem/solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace hymem;

namespace {

py::dict simulate_system(const std::string& system, const std::vector<std::string>& overrides,
                         std::optional<double> t_max, std::optional<int> j_max, std::optional<double> step,
                         bool jump_priority) {
  ResolvedSystem rs = resolve_system(system, overrides);
  SimOptions so;
  rs.sim.apply(so);
  if (t_max) so.t_max = *t_max;
  if (j_max) so.j_max = *j_max;
  if (step) so.step = *step;
  so.jump_priority = jump_priority;
  const HybridMemoryArc init = make_initial_arc(rs.system.spec, rs.initial_history);
  Trajectory tr;
  {
    py::gil_scoped_release release;
    tr = simulate(rs.system.spec, init, so);
  }
  std::vector<double> t;
  std::vector<int> j;
  std::vector<double> dist;
  std::vector<Vec> rows;
  for (const Segment& s : tr.arc.segments())
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.j < 0 || s.times[i] < -kTimeTol) continue;
      t.push_back(s.times[i]);
      j.push_back(s.j);
      rows.push_back(tr.arc.sample(s, i));
      dist.push_back(rs.system.target.distW(rows.back()));
    }
  Mat x(static_cast<Eigen::Index>(rows.size()), rs.system.spec.n);
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  py::dict d;
  d["t"] = t;
  d["j"] = j;
  d["x"] = x;
  d["dist_W"] = dist;
  d["state_names"] = rs.system.spec.state_names;
  d["termination"] = to_string(tr.termination);
  d["message"] = tr.message;
  d["jumps"] = tr.jumps.size();
  d["summary_json"] = run_summary_json(run_summary(tr, rs.system.target), {rs.system.spec.name, 0, false});
  return d;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::run(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

py::dict example1_certificate(const std::vector<std::string>& overrides, double lyapunov_decay) {
  Example1CertificateOptions o;
  o.lyapunov_decay = lyapunov_decay;
  const Example1Certificate c = make_example1_certificate(example1_params(overrides), o);
  py::dict d;
  d["H"] = c.H;
  d["P"] = c.P;
  d["Q"] = c.Q;
  d["spectral_radius"] = c.spectral_radius;
  d["residual"] = c.residual;
  d["rho"] = c.rho;
  d["sigma"] = c.sigma;
  d["rho_hat"] = c.rho_hat;
  d["c1"] = c.c1;
  d["c2"] = c.c2;
  return d;
}

py::dict example2_rates(const std::vector<std::string>& overrides) {
  const Example2Certificate c = make_example2_certificate(example2_params(overrides));
  py::dict d;
  d["flow_rate"] = c.flow_rate;
  d["jump_rate"] = c.jump_rate;
  d["alpha3_coeff"] = c.alpha3_coeff;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hymem, m) {
  m.doc() = "Simulation and stability checks for hybrid systems with memory";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError");

  m.def("expm", [](const Mat& A) { return expm(A); }, py::arg("A"));
  m.def("spectral_radius", [](const Mat& A) { return spectral_radius(A); }, py::arg("A"));
  m.def(
      "solve_discrete_lyapunov",
      [](const Mat& H, std::optional<Mat> Q) { return Q ? solve_discrete_lyapunov(H, *Q) : solve_discrete_lyapunov(H); },
      py::arg("H"), py::arg("Q") = py::none(), "P with H^T P H - P = -Q (Q defaults to identity)");
  m.def("contraction_factor", [](const Mat& H, const Mat& P) { return contraction_factor(H, P); }, py::arg("H"),
        py::arg("P"));
  m.def("simulate", &simulate_system, py::arg("system") = "example1", py::arg("overrides") = std::vector<std::string>{},
        py::arg("t_max") = py::none(), py::arg("j_max") = py::none(), py::arg("step") = py::none(),
        py::arg("jump_priority") = true);
  m.def("run_cli", &run_cli, py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr)");
  m.def("example1_certificate", &example1_certificate, py::arg("overrides") = std::vector<std::string>{},
        py::arg("lyapunov_decay") = 1.0);
  m.def("example2_rates", &example2_rates, py::arg("overrides") = std::vector<std::string>{});
}
