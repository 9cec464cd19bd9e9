#include "eb/matcore.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace eb {

std::string to_string(Relaxation r) {
  switch (r) {
    case Relaxation::nat: return "nat";
    case Relaxation::linx: return "linx";
    case Relaxation::ddfact: return "ddfact";
    case Relaxation::bqp: return "bqp";
  }
  return "?";
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::gap_tol: return "gap_tol";
    case Termination::iter_limit: return "iter_limit";
    case Termination::time_limit: return "time_limit";
  }
  return "?";
}

SymEigen sym_eigen(const Matrix& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("sym_eigen: not square");
  if (!M.allFinite()) throw std::invalid_argument("sym_eigen: non-finite input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sym_eigen: eigensolver failed");
  // Eigen returns ascending; flip to descending.
  const Index q = M.rows();
  SymEigen out;
  out.values = es.eigenvalues().reverse();
  out.basis = es.eigenvectors().rowwise().reverse();
  (void)q;
  return out;
}

Vector vec_delta(const Matrix& M, double delta) {
  if (M.rows() != M.cols()) throw std::invalid_argument("vec_delta: not square");
  if (delta <= 0.0) throw std::invalid_argument("vec_delta: delta must be > 0");
  const Index q = M.rows();
  Vector v(packed_size(q));
  Index p = 0;
  for (Index j = 0; j < q; ++j) {
    v[p++] = M(j, j);
    for (Index i = j + 1; i < q; ++i) v[p++] = delta * M(i, j);
  }
  return v;
}

Matrix unvec_delta(const Vector& v, Index q, double delta) {
  if (v.size() != packed_size(q))
    throw std::invalid_argument("unvec_delta: length mismatch");
  Matrix M(q, q);
  Index p = 0;
  for (Index j = 0; j < q; ++j) {
    M(j, j) = v[p++];
    for (Index i = j + 1; i < q; ++i) {
      M(i, j) = v[p] / delta;
      M(j, i) = M(i, j);
      ++p;
    }
  }
  return M;
}

Matrix prox_neg_logdet(const Matrix& Y, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("prox_neg_logdet: rho must be > 0");
  SymEigen eig = sym_eigen(rho * Y);
  Vector lam(eig.values.size());
  for (Index l = 0; l < lam.size(); ++l) {
    const double th = eig.values[l];
    lam[l] = (th + std::sqrt(th * th + 4.0 * rho)) / (2.0 * rho);
  }
  return eig.basis * lam.asDiagonal() * eig.basis.transpose();
}

Matrix project_psd(const Matrix& M) {
  SymEigen eig = sym_eigen(M);
  Vector lam = eig.values.cwiseMax(0.0);
  return eig.basis * lam.asDiagonal() * eig.basis.transpose();
}

Vector project_capped_simplex(const Vector& v, Index s) {
  const Index n = v.size();
  if (s <= 0 || s >= n)
    throw std::invalid_argument("project_capped_simplex: need 0 < s < n");
  auto mass = [&](double tau) {
    double m = 0.0;
    for (Index i = 0; i < n; ++i)
      m += std::clamp(v[i] - tau, 0.0, 1.0);
    return m;
  };
  double lo = v.minCoeff() - 1.0;
  double hi = v.maxCoeff();
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mass(mid) > static_cast<double>(s))
      lo = mid;
    else
      hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = std::clamp(v[i] - tau, 0.0, 1.0);
  // Distribute the residual over unclamped coordinates to hit e'x = s exactly.
  double res = static_cast<double>(s) - x.sum();
  if (res != 0.0) {
    std::vector<Index> free;
    for (Index i = 0; i < n; ++i)
      if (x[i] > 0.0 && x[i] < 1.0) free.push_back(i);
    if (!free.empty()) {
      double adj = res / static_cast<double>(free.size());
      for (Index i : free) x[i] = std::clamp(x[i] + adj, 0.0, 1.0);
    }
  }
  return x;
}

double top_s_sum(const Vector& g, Index s) {
  const Index n = g.size();
  if (s <= 0 || s > n) throw std::invalid_argument("top_s_sum: need 0 < s <= n");
  std::vector<double> w(g.data(), g.data() + n);
  std::nth_element(w.begin(), w.begin() + (s - 1), w.end(),
                   std::greater<double>());
  double total = 0.0;
  for (Index i = 0; i < s; ++i) total += w[i];
  return total;
}

namespace {
// Locate the failing pivot of a plain Cholesky; only called on the error path.
Index failing_pivot(const Matrix& M) {
  const Index q = M.rows();
  Matrix L = Matrix::Zero(q, q);
  for (Index j = 0; j < q; ++j) {
    double d = M(j, j) - L.row(j).head(j).squaredNorm();
    if (d <= 0.0 || !std::isfinite(d)) return j;
    L(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < q; ++i)
      L(i, j) = (M(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
  }
  return -1;
}
}  // namespace

CholFactor::CholFactor(const Matrix& M) : llt_(M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("CholFactor: not square");
  if (llt_.info() != Eigen::Success) throw NotPositiveDefinite(failing_pivot(M));
  // Eigen's LLT does not flag semidefinite inputs with tiny negative trailing
  // pivots reliably; reject non-positive diagonal of the factor explicitly.
  for (Index i = 0; i < M.rows(); ++i)
    if (!(llt_.matrixLLT()(i, i) > 0.0)) throw NotPositiveDefinite(i);
}

double CholFactor::logdet() const {
  double ld = 0.0;
  for (Index i = 0; i < llt_.matrixLLT().rows(); ++i)
    ld += std::log(llt_.matrixLLT()(i, i));
  return 2.0 * ld;
}

double logdet_spd(const Matrix& M) { return CholFactor(M).logdet(); }

}  // namespace eb
