#pragma once

// 2-block ADMM for the continuous relaxation of 0/1 D-optimal design:
// max ldet(A' Diag(x) A) over the capped simplex.

#include <optional>

#include "eb/instances.hpp"
#include "eb/types.hpp"

namespace eb {

struct NatState {
  Vector x;
  Matrix Z;
  Matrix Psi;
  double delta = 0.0;
  double rho = 0.0;
  long iter = 0;
};

struct NatWork {
  Matrix G;  // packed_size(m) x n, column l = vec_sqrt2(v_l v_l')
};

NatWork build_work_nat(const DoptInstance& inst);
NatState init_state_nat(const DoptInstance& inst, double rho);

Vector xupdate_nat(const DoptInstance& inst, const NatState& state,
                   const NatWork& work);
Matrix zupdate_nat(const DoptInstance& inst, const NatState& state);
void multiplier_update_nat(const DoptInstance& inst, NatState& state);

// Relaxation objective at a feasible x (requires the information matrix PD).
double primal_value_nat(const DoptInstance& inst, const Vector& x_feas);

struct Certificate {
  double bound;
  Vector x_feas;
};

// Supergradient certificate: project x_raw onto the capped simplex, then
// bound the concave objective by its linearization maximized over the
// polytope (a top-s selection).  Empty when the information matrix at the
// projected point is singular.
std::optional<Certificate> dual_bound_nat(const DoptInstance& inst,
                                          const Vector& x_raw);

double default_rho_nat(const DoptInstance& inst);

BoundReport solve_nat(const DoptInstance& inst, const SolveOptions& opts);

}  // namespace eb
