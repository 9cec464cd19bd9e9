#pragma once

// The factorization relaxation of maximum-entropy sampling:
// max Gamma_s(F' Diag(x) F) with C = F F', and its 2-block ADMM.  The key
// piece is the closed-form proximal map of -Gamma_s, built from a spectral
// split index jhat that generalizes the Nikolov split index to rho > 0.

#include <optional>

#include "eb/dopt.hpp"  // Certificate
#include "eb/instances.hpp"
#include "eb/matcore.hpp"
#include "eb/types.hpp"

namespace eb {

// Unique i in [0, s) with lambda_i > avg(lambda_{i+1..k}) * 1 >= lambda_{i+1},
// where avg is the tail mean over s - i slots (lambda_0 = +inf).
Index nikolov_index(const Vector& lambda_desc, Index s);

struct GammaEval {
  Index ihat;
  double value;
};

// Gamma_s of a PSD matrix given by its descending eigenvalues:
// sum of log of the top ihat eigenvalues plus (s - ihat) times the log of
// the averaged tail.  Throws NotInDomain when the tail average is <= 0.
GammaEval phi_s(const Vector& lambda_desc, Index s);
GammaEval gamma_s(const Matrix& X, Index s);

// Extreme-point supergradient of Gamma_s at Z (beta_l = beta_r beyond the
// numerical rank r).  Throws NotInDomain when rank < s.
Matrix supgrad_gamma(const SymEigen& eig, Index s);

// Split index for the prox: unique j in [0, s) satisfying the two-sided
// chain on f_rho(theta) = theta + sqrt(theta^2 + 4 rho).  Returns nullopt
// when the existence condition fails (never for theta >= 0).
std::optional<Index> jhat_index(const Vector& theta_desc, double rho, Index s);

struct GammaProx {
  Index jhat;
  double phi;
  Vector lambda;  // descending eigenvalues of the prox result
  Vector theta;   // input spectrum (descending)
  double rho;
};

GammaProx lambda_from_jhat(const Vector& theta_desc, double rho, Index s,
                           Index jhat);

struct DDFactState {
  Vector x;
  Matrix Z;
  Matrix Psi;
  double delta = 0.0;
  double rho = 0.0;
  long iter = 0;
  long no_valid_j = 0;
  long negative_lambda = 0;
};

DDFactState init_state_ddfact(const MespInstance& inst, const FactorChoice& fc,
                              double rho);
Matrix build_G_ddfact(const Matrix& F);
Vector xupdate_ddfact(const MespInstance& inst, const DDFactState& state,
                      const Matrix& G);

struct ZUpdateOptions {
  bool project_lambda = false;  // clamp negative prox eigenvalues to 0
};

Matrix zupdate_ddfact(const MespInstance& inst, const FactorChoice& fc,
                      DDFactState& state, const ZUpdateOptions& zopts = {});
void multiplier_update_ddfact(const MespInstance& inst, const FactorChoice& fc,
                              DDFactState& state);

double primal_value_ddfact(const MespInstance& inst, const FactorChoice& fc,
                           const Vector& x_feas);
std::optional<Certificate> dual_bound_ddfact(const MespInstance& inst,
                                             const FactorChoice& fc,
                                             const Vector& x_raw);

double default_rho_ddfact(const MespInstance& inst, Index rank);

BoundReport solve_ddfact(const MespInstance& inst, const FactorChoice& fc,
                         const SolveOptions& opts,
                         const ZUpdateOptions& zopts = {});

}  // namespace eb
