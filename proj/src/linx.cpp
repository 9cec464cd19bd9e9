#include "eb/linx.hpp"

#include <cmath>
#include <limits>

#include "eb/admm_common.hpp"
#include "eb/matcore.hpp"

namespace eb {

Matrix build_G_linx(const Matrix& C, double gamma) {
  const Index n = C.rows();
  Matrix G(packed_size(n), n);
  for (Index l = 0; l < n; ++l) {
    Vector c = C.row(l);
    Matrix M = gamma * (c * c.transpose());
    M(l, l) -= 1.0;
    G.col(l) = vec_delta(M, std::sqrt(2.0));
  }
  return G;
}

Matrix linx_arg(const Matrix& C, double gamma, const Vector& x) {
  Matrix M = gamma * (C * x.asDiagonal() * C);
  M.diagonal().array() += (1.0 - x.array());
  return M;
}

LinxState init_state_linx(const MespInstance& inst, double gamma, double rho) {
  LinxState st;
  st.x = Vector::Constant(inst.n(), static_cast<double>(inst.s) / inst.n());
  st.Z = linx_arg(inst.C, gamma, st.x);
  st.Psi = Matrix::Zero(inst.n(), inst.n());
  st.rho = rho;
  st.gamma = gamma;
  return st;
}

Vector xupdate_linx(const MespInstance& inst, const LinxState& state,
                    const Matrix& G) {
  Matrix T = state.Z + state.Psi;
  T.diagonal().array() -= 1.0;
  Vector d_mat = vec_delta(T, std::sqrt(2.0));
  detail::BoxLsq lsq{G};
  return lsq.gradient_step(state.x, d_mat,
                           static_cast<double>(inst.s) + state.delta);
}

Matrix zupdate_linx(const MespInstance& inst, const LinxState& state) {
  Matrix Y = linx_arg(inst.C, state.gamma, state.x) - state.Psi;
  return prox_neg_logdet(Y, state.rho);
}

void multiplier_update_linx(const MespInstance& inst, LinxState& state) {
  state.Psi += -linx_arg(inst.C, state.gamma, state.x) + state.Z;
  state.delta += -state.x.sum() + static_cast<double>(inst.s);
  ++state.iter;
}

double primal_value_linx(const MespInstance& inst, double gamma,
                         const Vector& x_feas) {
  double ldet = logdet_spd(linx_arg(inst.C, gamma, x_feas));
  return 0.5 * (ldet - static_cast<double>(inst.s) * std::log(gamma)) +
         inst.offset;
}

std::optional<Certificate> dual_bound_linx(const MespInstance& inst,
                                           double gamma, const Vector& x_raw) {
  if (!x_raw.allFinite()) return std::nullopt;
  Vector x_feas = project_capped_simplex(x_raw, inst.s);
  Matrix M = linx_arg(inst.C, gamma, x_feas);
  double f;
  Matrix Minv;
  try {
    CholFactor fac(M);
    f = 0.5 * (fac.logdet() - static_cast<double>(inst.s) * std::log(gamma)) +
        inst.offset;
    Minv = fac.solve(Matrix::Identity(inst.n(), inst.n()));
  } catch (const NotPositiveDefinite&) {
    return std::nullopt;
  }
  // grad_l = (1/2)(gamma (C M^{-1} C)_ll - (M^{-1})_ll)
  Vector g =
      0.5 * (gamma * (inst.C * Minv * inst.C).diagonal() - Minv.diagonal());
  double bound = f - g.dot(x_feas) + top_s_sum(g, inst.s);
  return Certificate{bound, std::move(x_feas)};
}

BoundReport solve_linx(const MespInstance& inst, const SolveOptions& opts,
                       double gamma) {
  const double t0 = detail::now_seconds();
  // family default, scaled inversely with n (small dense problems need a
  // stiffer penalty to keep the certified bound tightening)
  const double rho =
      opts.rho > 0.0 ? opts.rho : std::max(1e-1, 10.0 / inst.n());

  Matrix G = build_G_linx(inst.C, gamma);
  LinxState st = init_state_linx(inst, gamma, rho);

  BoundReport rep;
  rep.relaxation = Relaxation::linx;
  rep.rho = rho;
  rep.gamma = gamma;
  rep.seed = opts.seed;
  rep.termination = Termination::iter_limit;

  double best_bound = std::numeric_limits<double>::infinity();
  double best_primal = -std::numeric_limits<double>::infinity();

  auto certify = [&]() -> bool {
    auto cert = dual_bound_linx(inst, gamma, st.x);
    if (!cert) {
      ++rep.event_counters["no_certificate"];
      return false;
    }
    double primal = -std::numeric_limits<double>::infinity();
    try {
      primal = primal_value_linx(inst, gamma, cert->x_feas);
    } catch (const NotPositiveDefinite&) {
    }
    if (cert->bound < best_bound) best_bound = cert->bound;
    if (primal > best_primal) {
      best_primal = primal;
      rep.x_feas = cert->x_feas;
    }
    if (opts.collect_trace) {
      double res_p = (-linx_arg(inst.C, gamma, st.x) + st.Z).norm();
      double res_d = std::abs(st.x.sum() - static_cast<double>(inst.s));
      rep.trace.push_back({st.iter, detail::now_seconds() - t0, best_primal,
                           best_bound, best_bound - best_primal, res_p, res_d});
    }
    return best_bound - best_primal <= opts.gap_tol;
  };

  while (st.iter < opts.max_iter) {
    st.x = xupdate_linx(inst, st, G);
    st.Z = zupdate_linx(inst, st);
    multiplier_update_linx(inst, st);
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
