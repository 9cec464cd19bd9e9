#include "eb/dopt.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "eb/admm_common.hpp"
#include "eb/matcore.hpp"

namespace eb {

namespace detail {
double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}
}  // namespace detail

NatWork build_work_nat(const DoptInstance& inst) {
  const Index n = inst.n(), m = inst.m();
  NatWork work;
  work.G.resize(packed_size(m), n);
  for (Index l = 0; l < n; ++l) {
    Vector v = inst.A.row(l);
    work.G.col(l) = vec_delta(v * v.transpose(), std::sqrt(2.0));
  }
  return work;
}

NatState init_state_nat(const DoptInstance& inst, double rho) {
  NatState st;
  st.x = Vector::Constant(inst.n(), static_cast<double>(inst.s) / inst.n());
  st.Z = inst.info_matrix(st.x);
  st.Psi = Matrix::Zero(inst.m(), inst.m());
  st.delta = 0.0;
  st.rho = rho;
  return st;
}

Vector xupdate_nat(const DoptInstance& inst, const NatState& state,
                   const NatWork& work) {
  Vector d_mat = vec_delta(state.Z + state.Psi, std::sqrt(2.0));
  const double d_sc = static_cast<double>(inst.s) + state.delta;
  detail::BoxLsq lsq{work.G};
  return lsq.gradient_step(state.x, d_mat, d_sc);
}

Matrix zupdate_nat(const DoptInstance& inst, const NatState& state) {
  Matrix Y = inst.info_matrix(state.x) - state.Psi;
  return prox_neg_logdet(Y, state.rho);
}

void multiplier_update_nat(const DoptInstance& inst, NatState& state) {
  state.Psi += -inst.info_matrix(state.x) + state.Z;
  state.delta += -state.x.sum() + static_cast<double>(inst.s);
  ++state.iter;
}

double primal_value_nat(const DoptInstance& inst, const Vector& x_feas) {
  return logdet_spd(inst.info_matrix(x_feas));
}

std::optional<Certificate> dual_bound_nat(const DoptInstance& inst,
                                          const Vector& x_raw) {
  if (!x_raw.allFinite()) return std::nullopt;
  Vector x_feas = inst.n() == inst.s
                      ? Vector::Ones(inst.n()).eval()
                      : project_capped_simplex(x_raw, inst.s);
  Matrix W = inst.info_matrix(x_feas);
  double ldet;
  Matrix Winv;
  try {
    CholFactor fac(W);
    ldet = fac.logdet();
    Winv = fac.solve(Matrix::Identity(inst.m(), inst.m()));
  } catch (const NotPositiveDefinite&) {
    return std::nullopt;
  }
  // gradient of ldet(A' Diag(x) A) at x_feas: g_l = v_l' W^{-1} v_l
  Vector g = ((inst.A * Winv).cwiseProduct(inst.A)).rowwise().sum();
  // concavity: opt <= f(x) + max over the polytope of <g, y - x>, and
  // g'x = trace(W^{-1} W) = m.
  double bound = ldet - static_cast<double>(inst.m()) + top_s_sum(g, inst.s);
  return Certificate{bound, std::move(x_feas)};
}

double default_rho_nat(const DoptInstance& inst) {
  // Penalty trends for the random family: 2.5e-4 for m <= 20, 1.0e-4 for
  // m <= 27, 5.0e-5 above, at full size (n = 1000 m).  The quadratic scales
  // with n, so shrink the penalty proportionally for reduced-size instances.
  double rho_full = 1e-3;
  if (inst.family == DoptFamily::random_normal) {
    rho_full = inst.m() <= 20 ? 2.5e-4 : (inst.m() <= 27 ? 1.0e-4 : 5.0e-5);
  } else if (inst.family == DoptFamily::linear_response) {
    rho_full = 2.5e-2;
  } else if (inst.family == DoptFamily::quadratic_response) {
    rho_full = 7.0e-4;
  }
  const double full_n = 1000.0 * inst.m();
  return rho_full * full_n / static_cast<double>(inst.n());
}

BoundReport solve_nat(const DoptInstance& inst, const SolveOptions& opts) {
  const double t0 = detail::now_seconds();
  const double rho = opts.rho > 0.0 ? opts.rho : default_rho_nat(inst);

  NatWork work = build_work_nat(inst);
  NatState st = init_state_nat(inst, rho);

  BoundReport rep;
  rep.relaxation = Relaxation::nat;
  rep.rho = rho;
  rep.seed = opts.seed;
  rep.termination = Termination::iter_limit;

  double best_bound = std::numeric_limits<double>::infinity();
  double best_primal = -std::numeric_limits<double>::infinity();

  auto certify = [&]() -> bool {
    auto cert = dual_bound_nat(inst, st.x);
    if (!cert) {
      ++rep.event_counters["no_certificate"];
      return false;
    }
    double primal = -std::numeric_limits<double>::infinity();
    try {
      primal = primal_value_nat(inst, cert->x_feas);
    } catch (const NotPositiveDefinite&) {
    }
    if (cert->bound < best_bound) best_bound = cert->bound;
    if (primal > best_primal) {
      best_primal = primal;
      rep.x_feas = cert->x_feas;
    }
    if (opts.collect_trace) {
      double res_p = (-inst.info_matrix(st.x) + st.Z).norm();
      double res_d = std::abs(st.x.sum() - static_cast<double>(inst.s));
      rep.trace.push_back({st.iter, detail::now_seconds() - t0, best_primal,
                           best_bound, best_bound - best_primal, res_p, res_d});
    }
    return best_bound - best_primal <= opts.gap_tol;
  };

  while (st.iter < opts.max_iter) {
    st.x = xupdate_nat(inst, st, work);
    st.Z = zupdate_nat(inst, st);
    multiplier_update_nat(inst, st);
    if (st.iter % opts.cert_period == 0) {
      if (certify()) {
        rep.termination = Termination::gap_tol;
        break;
      }
      if (detail::now_seconds() - t0 > opts.time_limit_s) {
        rep.termination = Termination::time_limit;
        break;
      }
    }
  }
  if (rep.termination != Termination::gap_tol) certify();

  rep.bound = best_bound;
  rep.primal_value = best_primal;
  rep.dual_gap = best_bound - best_primal;
  rep.iterations = st.iter;
  rep.wall_time_s = detail::now_seconds() - t0;
  return rep;
}

}  // namespace eb
