#pragma once

// Dense symmetric linear algebra shared by all the solvers: ordered
// eigendecompositions, the log-det proximal map, PSD projection, and the
// small set of polytope projections used for certificates.

#include <Eigen/Cholesky>

#include "eb/types.hpp"

namespace eb {

// Ordered eigendecomposition of a symmetric matrix: values descending,
// columns of basis orthonormal.
struct SymEigen {
  Vector values;
  Matrix basis;

  Matrix reconstruct() const {
    return basis * values.asDiagonal() * basis.transpose();
  }
};

SymEigen sym_eigen(const Matrix& M);

// Lower-triangle vectorization in fixed column-major order with off-diagonal
// entries multiplied by delta.  With delta = sqrt(2) this is an isometry
// between symmetric matrices under ||.||_F and vectors under ||.||_2.
Vector vec_delta(const Matrix& M, double delta);

// Inverse of vec_delta: rebuild the symmetric matrix of order q.
Matrix unvec_delta(const Vector& v, Index q, double delta);

inline Index packed_size(Index q) { return q * (q + 1) / 2; }

// argmin_Z { -logdet(Z) + (rho/2) ||Z - Y||_F^2 }.  With theta the
// eigenvalues of rho*Y, the minimizer has eigenvalues
// (theta + sqrt(theta^2 + 4 rho)) / (2 rho) in the same basis.
Matrix prox_neg_logdet(const Matrix& Y, double rho);

// Frobenius-nearest positive-semidefinite matrix (eigenvalue clamping).
Matrix project_psd(const Matrix& M);

// Euclidean projection onto {x in [0,1]^n : e'x = s}, by bisection on the
// KKT shift tau with x = clamp(v - tau).
Vector project_capped_simplex(const Vector& v, Index s);

// max { g'y : e'y = s, 0 <= y <= 1 } = sum of the s largest entries.
double top_s_sum(const Vector& g, Index s);

// Reusable SPD factorization.  Throws NotPositiveDefinite with the index of
// the failing pivot.
class CholFactor {
 public:
  explicit CholFactor(const Matrix& M);
  template <class Rhs>
  auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    return llt_.solve(rhs.derived()).eval();
  }
  double logdet() const;
  Index order() const { return llt_.matrixLLT().rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

// 2 * sum log diag of the Cholesky factor.  Throws NotPositiveDefinite.
double logdet_spd(const Matrix& M);

}  // namespace eb
