// Python bindings for the core operations: instance generation, the four
// relaxation solvers, and the certification utilities.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eb/bqp.hpp"
#include "eb/certify.hpp"
#include "eb/ddfact.hpp"
#include "eb/dopt.hpp"
#include "eb/instances.hpp"
#include "eb/linx.hpp"
#include "eb/matcore.hpp"

namespace py = pybind11;
using namespace eb;

namespace {

SolveOptions make_options(double gap_tol, double feas_tol, long max_iter,
                          double time_limit_s, double rho, long cert_period,
                          std::uint64_t seed, bool collect_trace) {
  SolveOptions o;
  o.gap_tol = gap_tol;
  o.feas_tol = feas_tol;
  o.max_iter = max_iter;
  o.time_limit_s = time_limit_s;
  o.rho = rho;
  o.cert_period = cert_period;
  o.seed = seed;
  o.collect_trace = collect_trace;
  return o;
}

py::dict report_to_dict(const BoundReport& r) {
  py::dict d;
  d["relaxation"] = to_string(r.relaxation);
  d["bound"] = r.bound;
  d["primal_value"] = r.primal_value;
  d["dual_gap"] = r.dual_gap;
  d["iterations"] = r.iterations;
  d["wall_time_s"] = r.wall_time_s;
  d["termination"] = to_string(r.termination);
  d["rho"] = r.rho;
  d["gamma"] = r.gamma;
  d["seed"] = r.seed;
  d["event_counters"] = r.event_counters;
  if (r.x_feas.size() > 0) d["x_feas"] = Vector(r.x_feas);
  return d;
}

}  // namespace

PYBIND11_MODULE(_entropy_bounds, m) {
  m.doc() = "Certified convex-relaxation bounds for maximum-entropy sampling "
            "and 0/1 D-optimal design";

  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite");
  py::register_exception<NotInDomain>(m, "NotInDomain");

  // --- matrix core ---
  m.def("prox_neg_logdet", &prox_neg_logdet, py::arg("Y"), py::arg("rho"));
  m.def("project_psd", &project_psd, py::arg("Y"));
  m.def("project_capped_simplex", &project_capped_simplex, py::arg("x"),
        py::arg("s"));
  m.def("logdet_spd", &logdet_spd, py::arg("M"));

  // --- instances ---
  m.def(
      "gen_random_dopt",
      [](Index mm, std::uint64_t seed, double scale) {
        DoptInstance i = gen_random_dopt(mm, seed, scale);
        return py::make_tuple(i.A, i.s);
      },
      py::arg("m"), py::arg("seed"), py::arg("scale") = 1.0);
  m.def(
      "gen_mesp_rank",
      [](Index n, Index rank, Index s, std::uint64_t seed) {
        MespInstance i = gen_mesp_rank(n, rank, s, seed);
        return i.C;
      },
      py::arg("n"), py::arg("rank"), py::arg("s"), py::arg("seed"));

  // --- solvers ---
  m.def(
      "solve_nat",
      [](const Matrix& A, Index s, double gap_tol, double feas_tol,
         long max_iter, double time_limit_s, double rho, long cert_period,
         std::uint64_t seed) {
        DoptInstance inst;
        inst.A = A;
        inst.s = s;
        return report_to_dict(solve_nat(
            inst, make_options(gap_tol, feas_tol, max_iter, time_limit_s, rho,
                               cert_period, seed, false)));
      },
      py::arg("A"), py::arg("s"), py::arg("gap_tol") = 0.05,
      py::arg("feas_tol") = 1e-5, py::arg("max_iter") = 1000000,
      py::arg("time_limit_s") = 3600.0, py::arg("rho") = 0.0,
      py::arg("cert_period") = 50, py::arg("seed") = 0);

  m.def(
      "solve_linx",
      [](const Matrix& C, Index s, double gamma, double gap_tol,
         double feas_tol, long max_iter, double time_limit_s, double rho,
         long cert_period, std::uint64_t seed) {
        MespInstance inst;
        inst.C = C;
        inst.s = s;
        return report_to_dict(solve_linx(
            inst,
            make_options(gap_tol, feas_tol, max_iter, time_limit_s, rho,
                         cert_period, seed, false),
            gamma));
      },
      py::arg("C"), py::arg("s"), py::arg("gamma") = 1.0,
      py::arg("gap_tol") = 0.05, py::arg("feas_tol") = 1e-5,
      py::arg("max_iter") = 1000000, py::arg("time_limit_s") = 3600.0,
      py::arg("rho") = 0.0, py::arg("cert_period") = 50, py::arg("seed") = 0);

  m.def(
      "solve_ddfact",
      [](const Matrix& C, Index s, const std::string& factorization,
         double gap_tol, double feas_tol, long max_iter, double time_limit_s,
         double rho, long cert_period, std::uint64_t seed) {
        MespInstance inst;
        inst.C = C;
        inst.s = s;
        FactorChoice fc =
            factorize(C, factor_method_from_string(factorization));
        return report_to_dict(solve_ddfact(
            inst, fc,
            make_options(gap_tol, feas_tol, max_iter, time_limit_s, rho,
                         cert_period, seed, false)));
      },
      py::arg("C"), py::arg("s"), py::arg("factorization") = "spectral",
      py::arg("gap_tol") = 0.05, py::arg("feas_tol") = 1e-5,
      py::arg("max_iter") = 1000000, py::arg("time_limit_s") = 3600.0,
      py::arg("rho") = 0.0, py::arg("cert_period") = 50, py::arg("seed") = 0);

  m.def(
      "solve_bqp",
      [](const Matrix& C, Index s, double gamma, double gap_tol,
         double feas_tol, long max_iter, double time_limit_s, double rho,
         long cert_period, long cert_start, std::uint64_t seed) {
        MespInstance inst;
        inst.C = C;
        inst.s = s;
        SolveOptions o = make_options(gap_tol, feas_tol, max_iter,
                                      time_limit_s, rho, cert_period, seed,
                                      false);
        o.cert_start = cert_start;
        return report_to_dict(solve_bqp(inst, o, gamma));
      },
      py::arg("C"), py::arg("s"), py::arg("gamma") = 1.0,
      py::arg("gap_tol") = 0.05, py::arg("feas_tol") = 1e-5,
      py::arg("max_iter") = 1000000, py::arg("time_limit_s") = 3600.0,
      py::arg("rho") = 0.0, py::arg("cert_period") = 50,
      py::arg("cert_start") = 300, py::arg("seed") = 0);

  // --- certification utilities ---
  m.def(
      "frank_wolfe_linx",
      [](const Matrix& C, Index s, double gamma, double tol, long max_iter) {
        MespInstance inst;
        inst.C = C;
        inst.s = s;
        FwResult r = frank_wolfe_reference(Relaxation::linx, inst, nullptr,
                                           gamma, tol, max_iter);
        return py::make_tuple(r.value, r.gap, r.converged);
      },
      py::arg("C"), py::arg("s"), py::arg("gamma") = 1.0,
      py::arg("tol") = 1e-6, py::arg("max_iter") = 200000);

  m.def(
      "local_search_mesp",
      [](const Matrix& C, Index s) {
        MespInstance inst;
        inst.C = C;
        inst.s = s;
        IntegerSolution sol = local_search_lb(inst);
        return py::make_tuple(sol.support, sol.value);
      },
      py::arg("C"), py::arg("s"));

  m.def(
      "exhaustive_mesp",
      [](const Matrix& C, Index s) {
        MespInstance inst;
        inst.C = C;
        inst.s = s;
        IntegerSolution sol = exhaustive_optimum(inst);
        return py::make_tuple(sol.support, sol.value);
      },
      py::arg("C"), py::arg("s"));
}
