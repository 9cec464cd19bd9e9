#include "eb/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "eb/ddfact.hpp"
#include "eb/dopt.hpp"
#include "eb/linx.hpp"
#include "eb/matcore.hpp"

namespace eb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Vertex of the capped simplex maximizing <g, v>: indicator of the s
// largest entries of g, lowest index winning ties.
Vector top_s_vertex(const Vector& g, Index s) {
  std::vector<Index> idx(g.size());
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return g[a] > g[b]; });
  Vector v = Vector::Zero(g.size());
  for (Index l = 0; l < s; ++l) v[idx[static_cast<std::size_t>(l)]] = 1.0;
  return v;
}

struct Eval {
  double value;
  Vector grad;
};

FwResult frank_wolfe_loop(Index n, Index s,
                          const std::function<Eval(const Vector&)>& oracle,
                          double tol, long max_iter) {
  Vector x = Vector::Constant(n, static_cast<double>(s) / n);
  FwResult res;
  res.value = -kInf;
  for (long t = 1; t <= max_iter; ++t) {
    Eval ev = oracle(x);
    if (ev.value > res.value) res.value = ev.value;
    Vector v = top_s_vertex(ev.grad, s);
    res.gap = ev.grad.dot(v - x);
    res.iterations = t;
    if (res.gap <= tol) {
      res.converged = true;
      break;
    }
    x += (2.0 / (t + 2.0)) * (v - x);
  }
  return res;
}

}  // namespace

FwResult frank_wolfe_reference(Relaxation relaxation, const MespInstance& inst,
                               const FactorChoice* fc, double gamma, double tol,
                               long max_iter) {
  const Index n = inst.n(), s = inst.s;
  if (relaxation == Relaxation::linx) {
    auto oracle = [&](const Vector& x) -> Eval {
      Matrix M = linx_arg(inst.C, gamma, x);
      CholFactor fac(M);
      double f =
          0.5 * (fac.logdet() - static_cast<double>(s) * std::log(gamma)) +
          inst.offset;
      Matrix Minv = fac.solve(Matrix::Identity(n, n));
      Vector g =
          0.5 * (gamma * (inst.C * Minv * inst.C).diagonal() - Minv.diagonal());
      return {f, std::move(g)};
    };
    return frank_wolfe_loop(n, s, oracle, tol, max_iter);
  }
  if (relaxation == Relaxation::ddfact) {
    FactorChoice local;
    if (fc == nullptr) {
      local = factorize(inst.C, FactorMethod::spectral);
      fc = &local;
    }
    const Matrix& F = fc->F;
    auto oracle = [&](const Vector& x) -> Eval {
      Matrix X = F.transpose() * x.asDiagonal() * F;
      SymEigen eig = sym_eigen(X);
      double f = phi_s(eig.values, s).value + inst.offset;
      Matrix B = supgrad_gamma(eig, s);
      Vector g = ((F * B).cwiseProduct(F)).rowwise().sum();
      return {f, std::move(g)};
    };
    return frank_wolfe_loop(n, s, oracle, tol, max_iter);
  }
  throw std::invalid_argument(
      "frank_wolfe_reference: use the D-optimality overload for nat");
}

FwResult frank_wolfe_reference_dopt(const DoptInstance& inst, double tol,
                                    long max_iter) {
  const Index n = inst.n(), s = inst.s;
  auto oracle = [&](const Vector& x) -> Eval {
    Matrix W = inst.info_matrix(x);
    CholFactor fac(W);
    double f = fac.logdet();
    Matrix Winv = fac.solve(Matrix::Identity(W.rows(), W.cols()));
    Vector g = ((inst.A * Winv).cwiseProduct(inst.A)).rowwise().sum();
    return {f, std::move(g)};
  };
  return frank_wolfe_loop(n, s, oracle, tol, max_iter);
}

GammaSearchResult gamma_search(const std::function<double(double)>& bound_fn,
                               double lo_log10, double hi_log10,
                               double tol_log10) {
  auto eval = [&](double t) -> double {
    double v;
    try {
      v = bound_fn(std::pow(10.0, t));
    } catch (const std::exception&) {
      return kInf;
    }
    return std::isfinite(v) ? v : kInf;
  };

  GammaSearchResult best;
  best.bound_star = kInf;
  auto consider = [&](double t, double v) {
    if (v < best.bound_star) {
      best.bound_star = v;
      best.gamma_star = std::pow(10.0, t);
    }
  };

  double lo = lo_log10, hi = hi_log10;
  consider(lo, eval(lo));
  consider(hi, eval(hi));
  if (lo < 0.0 && 0.0 < hi) consider(0.0, eval(0.0));

  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = eval(c), fd = eval(d);
  consider(c, fc);
  consider(d, fd);
  while (b - a > tol_log10) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = eval(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = eval(d);
      consider(d, fd);
    }
  }
  return best;
}

namespace {

double ldet_or_neg_inf(const Matrix& M) {
  try {
    return logdet_spd(M);
  } catch (const NotPositiveDefinite&) {
    return -kInf;
  }
}

Matrix principal_submatrix(const Matrix& C, const std::vector<Index>& S) {
  Matrix M(static_cast<Index>(S.size()), static_cast<Index>(S.size()));
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t j = 0; j < S.size(); ++j)
      M(static_cast<Index>(i), static_cast<Index>(j)) = C(S[i], S[j]);
  return M;
}

// Regularized surrogate used only to steer greedy construction through the
// singular early stages; final values are always unregularized.
struct SupportObjective {
  std::function<double(const std::vector<Index>&)> exact;
  std::function<double(const std::vector<Index>&)> surrogate;
};

IntegerSolution greedy_plus_swap(Index n, Index s, const SupportObjective& obj) {
  std::vector<Index> S;
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  S.reserve(static_cast<std::size_t>(s));
  for (Index step = 0; step < s; ++step) {
    Index best_j = -1;
    double best_v = -kInf;
    for (Index j = 0; j < n; ++j) {
      if (in[static_cast<std::size_t>(j)]) continue;
      S.push_back(j);
      std::sort(S.begin(), S.end());
      double v = obj.surrogate(S);
      S.erase(std::find(S.begin(), S.end(), j));
      if (v > best_v) {
        best_v = v;
        best_j = j;
      }
    }
    if (best_j < 0) best_j = step;  // fully singular: deterministic fallback
    S.push_back(best_j);
    in[static_cast<std::size_t>(best_j)] = true;
    std::sort(S.begin(), S.end());
  }

  double cur = obj.exact(S);
  double cur_sur = obj.surrogate(S);
  bool improved = true;
  while (improved) {
    improved = false;
    Index swap_out = -1, swap_in = -1;
    double best_sur = cur_sur;
    for (std::size_t ii = 0; ii < S.size(); ++ii) {
      for (Index j = 0; j < n; ++j) {
        if (in[static_cast<std::size_t>(j)]) continue;
        std::vector<Index> T = S;
        T[ii] = j;
        std::sort(T.begin(), T.end());
        double v = obj.surrogate(T);
        if (v > best_sur + 1e-12) {
          best_sur = v;
          swap_out = static_cast<Index>(ii);
          swap_in = j;
        }
      }
    }
    if (swap_out >= 0) {
      in[static_cast<std::size_t>(S[static_cast<std::size_t>(swap_out)])] =
          false;
      in[static_cast<std::size_t>(swap_in)] = true;
      S[static_cast<std::size_t>(swap_out)] = swap_in;
      std::sort(S.begin(), S.end());
      cur_sur = best_sur;
      cur = obj.exact(S);
      improved = true;
    }
  }
  return {std::move(S), cur};
}

}  // namespace

double support_value(const MespInstance& inst, const std::vector<Index>& S) {
  double v = ldet_or_neg_inf(principal_submatrix(inst.C, S));
  return std::isfinite(v) ? v + inst.offset : v;
}

double support_value(const DoptInstance& inst, const std::vector<Index>& S) {
  const Index m = inst.m();
  Matrix W = Matrix::Zero(m, m);
  for (Index i : S) W += inst.A.row(i).transpose() * inst.A.row(i);
  return ldet_or_neg_inf(W);
}

IntegerSolution local_search_lb(const MespInstance& inst) {
  const double delta = 1e-8 * std::max(inst.C.diagonal().maxCoeff(), 1.0);
  SupportObjective obj;
  obj.exact = [&](const std::vector<Index>& S) {
    return support_value(inst, S);
  };
  obj.surrogate = [&](const std::vector<Index>& S) {
    Matrix M = principal_submatrix(inst.C, S);
    M.diagonal().array() += delta;
    return ldet_or_neg_inf(M);
  };
  return greedy_plus_swap(inst.n(), inst.s, obj);
}

IntegerSolution local_search_lb(const DoptInstance& inst) {
  const double delta =
      1e-8 * std::max(inst.A.rowwise().squaredNorm().maxCoeff(), 1.0);
  SupportObjective obj;
  obj.exact = [&](const std::vector<Index>& S) {
    return support_value(inst, S);
  };
  obj.surrogate = [&](const std::vector<Index>& S) {
    const Index m = inst.m();
    Matrix W = Matrix::Zero(m, m);
    for (Index i : S) W += inst.A.row(i).transpose() * inst.A.row(i);
    W.diagonal().array() += delta;
    return ldet_or_neg_inf(W);
  };
  return greedy_plus_swap(inst.n(), inst.s, obj);
}

void for_each_support(
    Index n, Index s,
    const std::function<void(const std::vector<Index>&)>& fn) {
  if (s < 0 || s > n) throw std::invalid_argument("for_each_support: bad s");
  std::vector<Index> S(static_cast<std::size_t>(s));
  std::iota(S.begin(), S.end(), Index{0});
  while (true) {
    fn(S);
    // advance to the next lexicographic s-subset
    Index i = s - 1;
    while (i >= 0 && S[static_cast<std::size_t>(i)] == n - s + i) --i;
    if (i < 0) break;
    ++S[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < s; ++j)
      S[static_cast<std::size_t>(j)] = S[static_cast<std::size_t>(j - 1)] + 1;
  }
}

namespace {

template <class Inst>
IntegerSolution exhaustive_impl(const Inst& inst, Index n, Index s) {
  IntegerSolution best;
  best.value = -kInf;
  for_each_support(n, s, [&](const std::vector<Index>& S) {
    double v = support_value(inst, S);
    if (v > best.value) {
      best.value = v;
      best.support = S;
    }
  });
  return best;
}

}  // namespace

IntegerSolution exhaustive_optimum(const MespInstance& inst) {
  return exhaustive_impl(inst, inst.n(), inst.s);
}

IntegerSolution exhaustive_optimum(const DoptInstance& inst) {
  return exhaustive_impl(inst, inst.n(), inst.s);
}

GapRecord gap_report(const BoundReport& report, const IntegerSolution& lb) {
  return {report.bound, lb.value, report.bound - lb.value};
}

}  // namespace eb
