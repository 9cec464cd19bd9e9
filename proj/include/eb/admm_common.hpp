#pragma once

// Pieces shared by the 2-block solvers: the packed least-squares data for
// the x-subproblem and the single projected gradient step used to update x.

#include "eb/matcore.hpp"
#include "eb/types.hpp"

namespace eb::detail {

// Data of min ||Hx - d||^2 over the box, with H = [G; e'] and
// d = (packed matrix target; scalar target).
struct BoxLsq {
  const Matrix& G;  // packed_size(q) x n

  // One exact line-search step along the negative gradient of ||Hx - d||^2
  // from x, then clamp to [0,1]^n.  d_mat is the packed matrix block of d,
  // d_scalar the last entry.
  Vector gradient_step(const Vector& x, const Vector& d_mat,
                       double d_scalar) const {
    Vector r_mat = G * x - d_mat;
    double r_sc = x.sum() - d_scalar;
    Vector g = G.transpose() * r_mat;
    g.array() += r_sc;
    const double gg = g.squaredNorm();
    if (gg == 0.0) return x;
    Vector Hg_mat = G * g;
    double hg = Hg_mat.squaredNorm();
    double gsum = g.sum();
    hg += gsum * gsum;
    if (hg <= 0.0) return x;
    const double alpha = gg / hg;
    return (x - alpha * g).cwiseMax(0.0).cwiseMin(1.0);
  }
};

// Wall-clock helper for solver loops.
double now_seconds();

}  // namespace eb::detail
