#pragma once

// 3-block ADMM for the lifted relaxation of maximum-entropy sampling with
// matrix variable W = [1 x'; x X], constraints diag(X) = x, Xe = sx,
// e'x = s, W PSD, and objective ldet(Ctilde o W + I) - s log gamma.
// Includes alternating-projection feasibility recovery and a slow
// projected-gradient reference solver for small instances.

#include <memory>
#include <optional>

#include "eb/instances.hpp"
#include "eb/matcore.hpp"
#include "eb/types.hpp"

namespace eb {

struct BqpConstraint {
  Matrix G;   // order n+1 symmetric
  double g;   // right-hand side
};

// The 2n+2 linear constraints in <G_l, W> = g_l form.
std::vector<BqpConstraint> build_bqp_constraints(Index n, Index s);

// [0 0'; 0 gamma C - I]
Matrix build_ctilde(const Matrix& C, double gamma);

// Precomputed data for the W-subproblem least squares (H constant across
// iterations, so its normal matrix is factored once) and for projections
// onto the constraint subspace.
class BqpWork {
 public:
  BqpWork(const Matrix& C, Index s, double gamma);

  Index n() const { return n_; }
  Index s() const { return s_; }
  double gamma() const { return gamma_; }
  const Matrix& ctilde() const { return ctilde_; }
  const std::vector<BqpConstraint>& constraints() const { return cons_; }
  long factor_count() const { return factor_count_; }

  // Least-squares W-update: given the three target blocks, solve the normal
  // equations with the cached factor and reassemble W.
  Matrix solve_w(const Matrix& z_target, const Matrix& e_target,
                 const Vector& omega_target) const;

  // Euclidean projection onto the affine subspace {<G_l, W> = g_l}.
  Matrix project_affine(const Matrix& W) const;

  Vector constraint_residuals(const Matrix& W) const;

 private:
  Index n_, s_;
  double gamma_;
  Matrix ctilde_;
  std::vector<BqpConstraint> cons_;
  Vector vc_;       // vec_sqrt2(ctilde)
  Vector vj_;       // vec_sqrt2(J)
  Matrix gvecs_;    // rows: vec_2(G_l)
  Eigen::LLT<Matrix> normal_llt_;   // of H'H
  Eigen::LDLT<Matrix> gram_ldlt_;   // of the constraint Gram matrix
  long factor_count_ = 0;
};

struct BqpState {
  Matrix W, E, Z;
  Matrix Psi, Phi;
  Vector omega;
  double rho = 0.0;
  long iter = 0;
};

// Uniform-design start: x = (s/n) e, X with the second moment of a uniform
// random s-subset; feasible for every constraint including W PSD.
BqpState init_state_bqp(const BqpWork& work, double rho);

Matrix wupdate_bqp(const BqpWork& work, const BqpState& state);
Matrix eupdate_bqp(const BqpState& state);
Matrix zupdate_bqp(const BqpWork& work, const BqpState& state);
void multiplier_update_bqp(const BqpWork& work, BqpState& state);

enum class ProjectionMethod { alternating, dykstra };

// Feasibility recovery: alternate (or Dykstra-correct) between the affine
// constraint subspace and the PSD cone until both residuals are below tol.
Matrix project_feasible_bqp(const BqpWork& work, const Matrix& W_raw,
                            double tol = 1e-5,
                            ProjectionMethod method = ProjectionMethod::alternating,
                            long max_sweeps = 10000);

// Relaxation objective at a feasible W (includes the instance offset).
double primal_value_bqp(const MespInstance& inst, const BqpWork& work,
                        const Matrix& W_feas);

struct BqpCertificate {
  double bound;
  Matrix W_feas;
};

// Supergradient certificate: maximize the linearization over the feasible
// region by projected gradient with Dykstra projections.
std::optional<BqpCertificate> dual_bound_bqp(const MespInstance& inst,
                                             const BqpWork& work,
                                             const Matrix& W_raw);

// Slow oracle: projected-gradient ascent on the objective itself with exact
// projections.  Practical cap n <= 40.
double reference_solver_bqp(const MespInstance& inst, double gamma,
                            double tol = 1e-4, long max_iter = 5000);

double default_rho_bqp(const MespInstance& inst);

struct BqpSolveExtras {
  bool auto_complement = false;
};

BoundReport solve_bqp(const MespInstance& inst, const SolveOptions& opts,
                      double gamma = 1.0, const BqpSolveExtras& extras = {});

}  // namespace eb
