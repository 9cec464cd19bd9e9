#include "eb/bqp.hpp"

#include <cmath>
#include <limits>

#include "eb/admm_common.hpp"

namespace eb {

std::vector<BqpConstraint> build_bqp_constraints(Index n, Index s) {
  if (s <= 0 || s >= n)
    throw std::invalid_argument("build_bqp_constraints: need 0 < s < n");
  std::vector<BqpConstraint> cons;
  cons.reserve(2 * n + 2);
  const Index q = n + 1;
  // diag(X) = x
  for (Index l = 0; l < n; ++l) {
    Matrix G = Matrix::Zero(q, q);
    G(0, l + 1) = G(l + 1, 0) = -0.5;
    G(l + 1, l + 1) = 1.0;
    cons.push_back({std::move(G), 0.0});
  }
  // X e = s x
  for (Index l = 0; l < n; ++l) {
    Matrix G = Matrix::Zero(q, q);
    G(0, l + 1) = G(l + 1, 0) = -0.5 * static_cast<double>(s);
    for (Index j = 0; j < n; ++j) {
      G(l + 1, j + 1) += 0.5;
      G(j + 1, l + 1) += 0.5;
    }
    cons.push_back({std::move(G), 0.0});
  }
  // e'x = s
  {
    Matrix G = Matrix::Zero(q, q);
    for (Index j = 0; j < n; ++j) G(0, j + 1) = G(j + 1, 0) = 0.5;
    cons.push_back({std::move(G), static_cast<double>(s)});
  }
  // W_11 = 1
  {
    Matrix G = Matrix::Zero(q, q);
    G(0, 0) = 1.0;
    cons.push_back({std::move(G), 1.0});
  }
  return cons;
}

Matrix build_ctilde(const Matrix& C, double gamma) {
  const Index n = C.rows();
  Matrix ct = Matrix::Zero(n + 1, n + 1);
  ct.bottomRightCorner(n, n) = gamma * C - Matrix::Identity(n, n);
  return ct;
}

BqpWork::BqpWork(const Matrix& C, Index s, double gamma)
    : n_(C.rows()), s_(s), gamma_(gamma), ctilde_(build_ctilde(C, gamma)),
      cons_(build_bqp_constraints(n_, s_)) {
  const Index q = n_ + 1;
  const Index p = packed_size(q);
  const double rt2 = std::sqrt(2.0);
  vc_ = vec_delta(ctilde_, rt2);
  vj_ = vec_delta(Matrix::Ones(q, q), rt2);
  gvecs_.resize(static_cast<Index>(cons_.size()), p);
  for (std::size_t l = 0; l < cons_.size(); ++l)
    gvecs_.row(static_cast<Index>(l)) = vec_delta(cons_[l].G, 2.0);

  // normal matrix of H = [Diag(vc); Diag(vj); gvecs]
  Matrix HtH = (vc_.array().square() + vj_.array().square())
                   .matrix()
                   .asDiagonal();
  HtH += gvecs_.transpose() * gvecs_;
  normal_llt_.compute(HtH);
  if (normal_llt_.info() != Eigen::Success)
    throw std::runtime_error("BqpWork: normal matrix not positive definite");
  ++factor_count_;

  // Gram matrix of the constraints for affine projection
  const Index c = gvecs_.rows();
  Matrix gram(c, c);
  for (Index i = 0; i < c; ++i)
    for (Index j = i; j < c; ++j) {
      double v = (cons_[i].G.cwiseProduct(cons_[j].G)).sum();
      gram(i, j) = gram(j, i) = v;
    }
  gram_ldlt_.compute(gram);
}

Matrix BqpWork::solve_w(const Matrix& z_target, const Matrix& e_target,
                        const Vector& omega_target) const {
  const Index q = n_ + 1;
  const double rt2 = std::sqrt(2.0);
  Vector rhs = vc_.cwiseProduct(vec_delta(z_target, rt2)) +
               vj_.cwiseProduct(vec_delta(e_target, rt2)) +
               gvecs_.transpose() * omega_target;
  Vector u = normal_llt_.solve(rhs);
  return unvec_delta(u, q, 1.0);
}

Vector BqpWork::constraint_residuals(const Matrix& W) const {
  Vector r(static_cast<Index>(cons_.size()));
  for (std::size_t l = 0; l < cons_.size(); ++l)
    r[static_cast<Index>(l)] =
        (cons_[l].G.cwiseProduct(W)).sum() - cons_[l].g;
  return r;
}

Matrix BqpWork::project_affine(const Matrix& W) const {
  Vector r = constraint_residuals(W);
  Vector mu = gram_ldlt_.solve(r);
  Matrix out = W;
  for (std::size_t l = 0; l < cons_.size(); ++l)
    out -= mu[static_cast<Index>(l)] * cons_[l].G;
  return out;
}

BqpState init_state_bqp(const BqpWork& work, double rho) {
  const Index n = work.n(), s = work.s();
  const Index q = n + 1;
  const double p1 = static_cast<double>(s) / n;
  const double p2 = n > 1 ? static_cast<double>(s) * (s - 1) / (n * (n - 1.0))
                          : p1;
  BqpState st;
  st.W = Matrix::Constant(q, q, p2);
  st.W(0, 0) = 1.0;
  for (Index i = 1; i < q; ++i) {
    st.W(0, i) = st.W(i, 0) = p1;
    st.W(i, i) = p1;
  }
  st.E = st.W;
  st.Z = work.ctilde().cwiseProduct(st.W) + Matrix::Identity(q, q);
  st.Psi = Matrix::Zero(q, q);
  st.Phi = Matrix::Zero(q, q);
  st.omega = Vector::Zero(2 * n + 2);
  st.rho = rho;
  return st;
}

Matrix wupdate_bqp(const BqpWork& work, const BqpState& state) {
  const Index q = work.n() + 1;
  Matrix z_target = state.Z + state.Psi - Matrix::Identity(q, q);
  Matrix e_target = state.E - state.Phi;
  Vector omega_target = state.omega;
  omega_target[2 * work.n()] += static_cast<double>(work.s());
  omega_target[2 * work.n() + 1] += 1.0;
  return work.solve_w(z_target, e_target, omega_target);
}

Matrix eupdate_bqp(const BqpState& state) {
  return project_psd(state.W + state.Phi);
}

Matrix zupdate_bqp(const BqpWork& work, const BqpState& state) {
  const Index q = work.n() + 1;
  Matrix Y = work.ctilde().cwiseProduct(state.W) + Matrix::Identity(q, q) -
             state.Psi;
  return prox_neg_logdet(Y, state.rho);
}

void multiplier_update_bqp(const BqpWork& work, BqpState& state) {
  const Index q = work.n() + 1;
  state.Psi += state.Z - work.ctilde().cwiseProduct(state.W) -
               Matrix::Identity(q, q);
  state.Phi += state.W - state.E;
  state.omega -= work.constraint_residuals(state.W);
  ++state.iter;
}

namespace {

double psd_violation(const Matrix& W) {
  double mineig = sym_eigen(W).values.minCoeff();
  return std::max(0.0, -mineig);
}

}  // namespace

Matrix project_feasible_bqp(const BqpWork& work, const Matrix& W_raw,
                            double tol, ProjectionMethod method,
                            long max_sweeps) {
  Matrix W = 0.5 * (W_raw + W_raw.transpose());
  Matrix corr = Matrix::Zero(W.rows(), W.cols());
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    Matrix A = work.project_affine(W);
    Matrix P;
    if (method == ProjectionMethod::dykstra) {
      Matrix T = A + corr;
      P = project_psd(T);
      corr = T - P;
    } else {
      P = project_psd(A);
    }
    W = P;
    double aff = work.constraint_residuals(W).cwiseAbs().maxCoeff();
    if (aff <= tol && psd_violation(W) <= tol) return W;
  }
  throw std::runtime_error(
      "project_feasible_bqp: no convergence, residual " +
      std::to_string(work.constraint_residuals(W).cwiseAbs().maxCoeff()));
}

double primal_value_bqp(const MespInstance& inst, const BqpWork& work,
                        const Matrix& W_feas) {
  const Index q = work.n() + 1;
  Matrix M = work.ctilde().cwiseProduct(W_feas) + Matrix::Identity(q, q);
  return logdet_spd(M) - static_cast<double>(work.s()) * std::log(work.gamma()) +
         inst.offset;
}

namespace {

// max <grad, W'> over the feasible region by projected gradient with
// Dykstra projections; returns the best value seen.
double linear_max_over_feasible(const BqpWork& work, const Matrix& grad,
                                const Matrix& start, double tol,
                                long max_iter) {
  Matrix W = start;
  double best = (grad.cwiseProduct(W)).sum();
  const double gnorm = std::max(grad.norm(), 1e-12);
  double stall = 0;
  for (long t = 1; t <= max_iter; ++t) {
    const double eta = static_cast<double>(work.n() + 1) /
                       (gnorm * std::sqrt(static_cast<double>(t)));
    Matrix trial = W + eta * grad;
    W = project_feasible_bqp(work, trial, std::min(tol, 1e-7),
                             ProjectionMethod::dykstra, 20000);
    double v = (grad.cwiseProduct(W)).sum();
    if (v > best + tol * 1e-2) {
      best = v;
      stall = 0;
    } else {
      if (++stall > 30) break;
    }
  }
  return best;
}

}  // namespace

std::optional<BqpCertificate> dual_bound_bqp(const MespInstance& inst,
                                             const BqpWork& work,
                                             const Matrix& W_raw) {
  const Index q = work.n() + 1;
  Matrix W_feas;
  try {
    W_feas = project_feasible_bqp(work, W_raw, 1e-7,
                                  ProjectionMethod::dykstra, 20000);
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
  Matrix M = work.ctilde().cwiseProduct(W_feas) + Matrix::Identity(q, q);
  double f;
  Matrix Minv;
  try {
    CholFactor fac(M);
    f = fac.logdet() - static_cast<double>(work.s()) * std::log(work.gamma()) +
        inst.offset;
    Minv = fac.solve(Matrix::Identity(q, q));
  } catch (const NotPositiveDefinite&) {
    return std::nullopt;
  }
  Matrix grad = work.ctilde().cwiseProduct(Minv);
  double lin_max = linear_max_over_feasible(work, grad, W_feas, 1e-4, 2000);
  double bound = f + lin_max - (grad.cwiseProduct(W_feas)).sum();
  return BqpCertificate{bound, std::move(W_feas)};
}

double reference_solver_bqp(const MespInstance& inst, double gamma, double tol,
                            long max_iter) {
  if (inst.n() > 40)
    throw std::invalid_argument("reference_solver_bqp: practical cap n <= 40");
  BqpWork work(inst.C, inst.s, gamma);
  const Index q = inst.n() + 1;
  BqpState st0 = init_state_bqp(work, 1.0);
  Matrix W = st0.W;

  auto value = [&](const Matrix& Wc) -> double {
    Matrix M = work.ctilde().cwiseProduct(Wc) + Matrix::Identity(q, q);
    try {
      return logdet_spd(M) - static_cast<double>(inst.s) * std::log(gamma) +
             inst.offset;
    } catch (const NotPositiveDefinite&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  double fval = value(W);
  double eta = 1.0;
  Matrix grad(q, q);
  for (long t = 0; t < max_iter; ++t) {
    Matrix M = work.ctilde().cwiseProduct(W) + Matrix::Identity(q, q);
    Matrix Minv = CholFactor(M).solve(Matrix::Identity(q, q));
    grad = work.ctilde().cwiseProduct(Minv);
    bool improved = false;
    for (int bt = 0; bt < 30; ++bt) {
      Matrix trial = project_feasible_bqp(work, W + eta * grad, 1e-9,
                                          ProjectionMethod::dykstra, 20000);
      double fv = value(trial);
      if (fv > fval) {
        W = trial;
        fval = fv;
        improved = true;
        eta *= 1.5;
        break;
      }
      eta *= 0.5;
    }
    if (!improved) break;
    if (t % 25 == 24) {
      double gap = linear_max_over_feasible(work, grad, W, tol * 0.1, 500) -
                   (grad.cwiseProduct(W)).sum();
      if (gap <= tol) break;
    }
  }
  return fval;
}

double default_rho_bqp(const MespInstance& inst) {
  // Family trend: 1.2e-1 at n = 63, 5e-2 at n = 250, 4e-2 at n = 400.
  if (inst.n() <= 100) return 1.2e-1;
  if (inst.n() <= 325) return 5e-2;
  return 4e-2;
}

namespace {

BoundReport solve_bqp_single(const MespInstance& inst, const SolveOptions& opts,
                             double gamma) {
  const double t0 = detail::now_seconds();
  const double rho = opts.rho > 0.0 ? opts.rho : default_rho_bqp(inst);

  BqpWork work(inst.C, inst.s, gamma);
  BqpState st = init_state_bqp(work, rho);

  BoundReport rep;
  rep.relaxation = Relaxation::bqp;
  rep.rho = rho;
  rep.gamma = gamma;
  rep.seed = opts.seed;
  rep.termination = Termination::iter_limit;

  double best_bound = std::numeric_limits<double>::infinity();
  double best_primal = -std::numeric_limits<double>::infinity();

  auto certify = [&]() -> bool {
    auto cert = dual_bound_bqp(inst, work, st.W);
    if (!cert) {
      ++rep.event_counters["no_certificate"];
      return false;
    }
    double primal = -std::numeric_limits<double>::infinity();
    try {
      primal = primal_value_bqp(inst, work, cert->W_feas);
    } catch (const NotPositiveDefinite&) {
    }
    if (cert->bound < best_bound) best_bound = cert->bound;
    if (primal > best_primal) {
      best_primal = primal;
      rep.x_feas = cert->W_feas.col(0).tail(inst.n());
    }
    if (opts.collect_trace) {
      double res_p = (st.W - st.E).norm();
      double res_d = work.constraint_residuals(st.W).norm();
      rep.trace.push_back({st.iter, detail::now_seconds() - t0, best_primal,
                           best_bound, best_bound - best_primal, res_p, res_d});
    }
    return best_bound - best_primal <= opts.gap_tol;
  };

  while (st.iter < opts.max_iter) {
    st.W = wupdate_bqp(work, st);
    st.E = eupdate_bqp(st);
    st.Z = zupdate_bqp(work, st);
    multiplier_update_bqp(work, st);
    if (st.iter >= opts.cert_start &&
        (st.iter - opts.cert_start) % opts.cert_period == 0) {
      if (certify()) {
        rep.termination = Termination::gap_tol;
        break;
      }
    }
    if (st.iter % 50 == 0 && detail::now_seconds() - t0 > opts.time_limit_s) {
      rep.termination = Termination::time_limit;
      break;
    }
  }
  if (rep.termination != Termination::gap_tol) certify();

  rep.event_counters["normal_factorizations"] = work.factor_count();
  rep.bound = best_bound;
  rep.primal_value = best_primal;
  rep.dual_gap = best_bound - best_primal;
  rep.iterations = st.iter;
  rep.wall_time_s = detail::now_seconds() - t0;
  return rep;
}

}  // namespace

BoundReport solve_bqp(const MespInstance& inst, const SolveOptions& opts,
                      double gamma, const BqpSolveExtras& extras) {
  BoundReport rep = solve_bqp_single(inst, opts, gamma);
  if (extras.auto_complement) {
    try {
      MespInstance comp = complement_instance(inst);
      BoundReport rep2 = solve_bqp_single(comp, opts, gamma);
      if (rep2.bound < rep.bound) {
        rep2.event_counters["used_complement"] = 1;
        return rep2;
      }
    } catch (const std::runtime_error&) {
      ++rep.event_counters["complement_unavailable"];
    }
  }
  return rep;
}

}  // namespace eb
