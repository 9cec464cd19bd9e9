#pragma once

// 2-block ADMM for the linx relaxation of maximum-entropy sampling:
// max (1/2)(ldet(gamma C Diag(x) C + Diag(e - x)) - s log gamma).

#include <optional>

#include "eb/dopt.hpp"  // Certificate
#include "eb/instances.hpp"
#include "eb/types.hpp"

namespace eb {

struct LinxState {
  Vector x;
  Matrix Z;
  Matrix Psi;
  double delta = 0.0;
  double rho = 0.0;
  double gamma = 1.0;
  long iter = 0;
};

// Column l = vec_sqrt2(gamma C_l' C_l - Diag(e_l)), so that
// G x = vec_sqrt2(gamma C Diag(x) C - Diag(x)).
Matrix build_G_linx(const Matrix& C, double gamma);

// gamma C Diag(x) C + Diag(e - x)
Matrix linx_arg(const Matrix& C, double gamma, const Vector& x);

LinxState init_state_linx(const MespInstance& inst, double gamma, double rho);
Vector xupdate_linx(const MespInstance& inst, const LinxState& state,
                    const Matrix& G);
Matrix zupdate_linx(const MespInstance& inst, const LinxState& state);
void multiplier_update_linx(const MespInstance& inst, LinxState& state);

// Relaxation objective at x (includes the instance offset).
double primal_value_linx(const MespInstance& inst, double gamma,
                         const Vector& x_feas);

std::optional<Certificate> dual_bound_linx(const MespInstance& inst,
                                           double gamma, const Vector& x_raw);

BoundReport solve_linx(const MespInstance& inst, const SolveOptions& opts,
                       double gamma = 1.0);

}  // namespace eb
