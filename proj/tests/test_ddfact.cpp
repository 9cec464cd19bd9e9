#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "eb/certify.hpp"
#include "eb/ddfact.hpp"
#include "eb/matcore.hpp"
#include "test_util.hpp"

using namespace eb;

static Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

static MespInstance mesp_of(const Matrix& C, Index s) {
  MespInstance i;
  i.C = C;
  i.s = s;
  return i;
}

// exhaustive reference for the split index
static Index nikolov_scan(const Vector& lam, Index s) {
  const Index k = lam.size();
  for (Index i = 0; i < s; ++i) {
    double tail = 0;
    for (Index l = i; l < k; ++l) tail += lam[l];
    double avg = tail / static_cast<double>(s - i);
    double left = i == 0 ? std::numeric_limits<double>::infinity() : lam[i - 1];
    if (left > avg && avg >= lam[i] - 1e-12 * std::max(1.0, std::abs(lam[i])))
      return i;
  }
  return -1;
}

TEST_CASE("nikolov_index examples") {
  CHECK(nikolov_index(vec3(1, 1, 1), 2) == 0);
  CHECK(nikolov_index(vec3(4, 2, 1), 2) == 1);
  CHECK_THROWS(nikolov_index(vec3(1, 2, 3), 2));
}

TEST_CASE("nikolov_index enumeration oracle") {
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    Index k = 2 + static_cast<Index>(rng.below(10));
    Index s = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
    Vector lam(k);
    for (Index i = 0; i < k; ++i) lam[i] = std::abs(rng.normal());
    if (rng.below(4) == 0)
      for (Index i = k - 1; i >= k - static_cast<Index>(rng.below(k)) && i >= 0; --i)
        lam[i] = 0.0;
    std::sort(lam.data(), lam.data() + k, std::greater<double>());
    Index got = nikolov_index(lam, s);
    Index want = nikolov_scan(lam, s);
    if (want >= 0) CHECK(got == want);
  }
}

TEST_CASE("gamma_s evaluation") {
  // all-ones spectrum: ihat = 0 and the value is s log(k/s)
  CHECK(gamma_s(Matrix::Identity(5, 5), 3).value ==
        doctest::Approx(3.0 * std::log(5.0 / 3.0)));
  CHECK(gamma_s(Matrix::Identity(4, 4), 4).value == doctest::Approx(0));
  Matrix D = vec3(4, 2, 1).asDiagonal();
  GammaEval e = gamma_s(D, 2);
  CHECK(e.ihat == 1);
  CHECK(e.value == doctest::Approx(std::log(12.0)));

  // rank < s -> NotInDomain
  Matrix R = Matrix::Zero(4, 4);
  R(0, 0) = 1.0;
  CHECK_THROWS_AS(gamma_s(R, 2), NotInDomain);
}

TEST_CASE("supgrad_gamma") {
  Matrix B = supgrad_gamma(sym_eigen(Matrix::Identity(4, 4)), 4);
  CHECK((B - Matrix::Identity(4, 4)).norm() <= 1e-10);

  SymEigen e = sym_eigen(Matrix(vec3(4, 2, 1).asDiagonal()));
  Matrix B2 = supgrad_gamma(e, 2);
  SymEigen eb2 = sym_eigen(B2);
  // ihat = 1: beta = (1/4, 1/3, 1/3); descending spectrum (1/3, 1/3, 1/4)
  // (the tail entries satisfy the trace identity sum beta_l lambda_l = s)
  CHECK(eb2.values[0] == doctest::Approx(1.0 / 3));
  CHECK(eb2.values[1] == doctest::Approx(1.0 / 3));
  CHECK(eb2.values[2] == doctest::Approx(0.25));

  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    Index k = 3 + static_cast<Index>(rng.below(6));
    Index s = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
    Matrix Z = tst::random_psd(rng, k);
    SymEigen ez = sym_eigen(Z);
    Matrix G = supgrad_gamma(ez, s);
    CHECK((G * Z).trace() == doctest::Approx(static_cast<double>(s)).epsilon(1e-9));
  }
}

TEST_CASE("jhat_index worked example and enumeration") {
  auto j = jhat_index(vec3(4, 1, 0), 1.0, 2);
  REQUIRE(j.has_value());
  CHECK(*j == 1);

  // rho -> 0 reduction to the Nikolov index
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    Index k = 2 + static_cast<Index>(rng.below(8));
    Index s = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
    Vector th(k);
    for (Index i = 0; i < k; ++i) th[i] = std::abs(rng.normal());
    std::sort(th.data(), th.data() + k, std::greater<double>());
    auto jj = jhat_index(th, 1e-9, s);
    REQUIRE(jj.has_value());  // theta >= 0 implies existence
    CHECK(*jj == nikolov_index(th, s));
  }
}

TEST_CASE("jhat_index s = k tie structure") {
  // theta with a trailing tie: jhat = index where the trailing tie begins
  Vector th(4);
  th << 5, 3, 1, 1;
  auto j = jhat_index(th, 0.7, 4);
  REQUIRE(j.has_value());
  CHECK(*j == 2);

  Vector td(4);
  td << 5, 3, 2, 1;  // strictly decreasing, s=k -> jhat = k-1
  auto jd = jhat_index(td, 0.7, 4);
  REQUIRE(jd.has_value());
  CHECK(*jd == 3);
}

static Vector beta_of(const GammaProx& p, Index s) {
  const Index k = p.lambda.size();
  Vector beta(k);
  double tail = 0;
  for (Index l = p.jhat; l < k; ++l) tail += p.lambda[l];
  for (Index l = 0; l < p.jhat; ++l) beta[l] = 1.0 / p.lambda[l];
  for (Index l = p.jhat; l < k; ++l)
    beta[l] = static_cast<double>(s - p.jhat) / tail;
  return beta;
}

TEST_CASE("lambda_from_jhat worked example") {
  GammaProx p = lambda_from_jhat(vec3(4, 1, 0), 1.0, 2, 1);
  CHECK(p.phi == doctest::Approx(4.0));
  CHECK(p.lambda[0] == doctest::Approx(2.0 + std::sqrt(5.0)));
  CHECK(p.lambda[1] == doctest::Approx(1.5));
  CHECK(p.lambda[2] == doctest::Approx(0.5));
  CHECK(p.lambda[1] + p.lambda[2] ==
        doctest::Approx(p.phi / (2.0 * p.rho)).epsilon(1e-12));
  // ordering chain: lambda_jhat > phi/(2 rho (s-jhat)) >= lambda_{jhat+1}
  CHECK(p.lambda[0] > p.phi / (2.0 * 1.0 * (2 - 1)));
  CHECK(p.phi / (2.0 * 1.0 * (2 - 1)) >= p.lambda[1]);
  // stationarity rho*lambda - beta - theta = 0
  Vector beta = beta_of(p, 2);
  for (Index l = 0; l < 3; ++l)
    CHECK(p.rho * p.lambda[l] - beta[l] - p.theta[l] ==
          doctest::Approx(0).epsilon(1e-9));
  CHECK(nikolov_index(p.lambda, 2) == p.jhat);
}

TEST_CASE("gamma prox identities on random spectra") {
  Rng rng(13);
  int signed_done = 0;
  for (int t = 0; t < 800 || signed_done < 50; ++t) {
    Index k = 2 + static_cast<Index>(rng.below(10));
    Index s = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
    double rho = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    bool want_signed = (t % 8 == 0);
    Vector th(k);
    for (Index i = 0; i < k; ++i) {
      th[i] = rng.normal() * 2.0;
      if (!want_signed) th[i] = std::abs(th[i]);
    }
    std::sort(th.data(), th.data() + k, std::greater<double>());
    auto j = jhat_index(th, rho, s);
    if (!j) continue;
    if (want_signed && th.minCoeff() < 0) ++signed_done;
    GammaProx p = lambda_from_jhat(th, rho, s, *j);
    // tail-sum identity
    double tail = 0;
    for (Index l = p.jhat; l < k; ++l) tail += p.lambda[l];
    CHECK(tail == doctest::Approx(p.phi / (2 * rho)).epsilon(1e-10));
    // stationarity
    Vector beta = beta_of(p, s);
    for (Index l = 0; l < k; ++l)
      CHECK(std::abs(rho * p.lambda[l] - beta[l] - th[l]) <=
            1e-9 * std::max(1.0, std::abs(th[l])));
    // the prox spectrum's own Nikolov index is jhat
    if (p.lambda.minCoeff() > 0.0) CHECK(nikolov_index(p.lambda, s) == p.jhat);
    if (t > 20000) break;  // safety
  }
  CHECK(signed_done >= 50);
}

TEST_CASE("zupdate_ddfact equals a grid-refined prox oracle on k <= 4") {
  Rng rng(17);
  for (int t = 0; t < 6; ++t) {
    Index k = 2 + static_cast<Index>(rng.below(3));  // 2..4
    Index s = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
    double rho = 0.5 + rng.uniform();
    Matrix Y = tst::random_sym(rng, k, 1.5);
    SymEigen ey = sym_eigen(rho * Y);
    auto j = jhat_index(ey.values, rho, s);
    if (!j) continue;
    GammaProx p = lambda_from_jhat(ey.values, rho, s, *j);
    if (p.lambda.minCoeff() <= 0.0) continue;
    auto objective = [&](const Vector& lam) {
      // -Gamma_s(lam) + rho/2 ||lam - eig(Y)||^2 in the shared eigenbasis
      Vector sorted = lam;
      std::sort(sorted.data(), sorted.data() + k, std::greater<double>());
      double val;
      try {
        val = -phi_s(sorted, s).value;
      } catch (const NotInDomain&) {
        return 1e300;
      }
      for (Index l = 0; l < k; ++l) {
        double d = lam[l] - ey.values[l] / rho;
        val += 0.5 * rho * d * d;
      }
      return val;
    };
    double f_star = objective(p.lambda);
    // random-restart coordinate refinement cannot find anything better
    Vector best = p.lambda;
    for (int r = 0; r < 200; ++r) {
      Vector cand = p.lambda;
      for (Index l = 0; l < k; ++l)
        cand[l] = std::max(1e-6, cand[l] + 0.5 * rng.normal());
      double step = 0.25;
      double fc = objective(cand);
      for (int it = 0; it < 200; ++it) {
        bool improved = false;
        for (Index l = 0; l < k; ++l) {
          for (double dir : {+1.0, -1.0}) {
            Vector nxt = cand;
            nxt[l] = std::max(1e-9, nxt[l] + dir * step);
            double fn = objective(nxt);
            if (fn < fc - 1e-13) {
              cand = nxt;
              fc = fn;
              improved = true;
            }
          }
        }
        if (!improved) step *= 0.5;
        if (step < 1e-8) break;
      }
      CHECK(f_star <= fc + 1e-6);
    }
  }
}

TEST_CASE("psi spectrum after the Z-update follows the corollary") {
  // worked case: theta = (4,1,0), s=2, rho=1 -> nu = (-2+sqrt(5), .5, .5)
  GammaProx p = lambda_from_jhat(vec3(4, 1, 0), 1.0, 2, 1);
  Vector nu(3);
  for (Index l = 0; l < 1; ++l)
    nu[l] = (-p.theta[l] + std::sqrt(p.theta[l] * p.theta[l] + 4.0)) / 2.0;
  CHECK(nu[0] == doctest::Approx(-2.0 + std::sqrt(5.0)));
  // lambda - theta/rho realizes nu for l <= jhat and 2(s-j)/phi beyond
  CHECK(p.lambda[0] - p.theta[0] == doctest::Approx(nu[0]).epsilon(1e-12));
  CHECK(p.lambda[1] - p.theta[1] == doctest::Approx(2.0 * 1 / p.phi).epsilon(1e-12));
  CHECK(p.lambda[2] - p.theta[2] == doctest::Approx(2.0 * 1 / p.phi).epsilon(1e-12));

  // random iterates: Psi = Z - Y positive definite with ascending spectrum
  Rng rng(19);
  MespInstance inst = mesp_of(tst::random_psd(rng, 8, 5), 3);
  FactorChoice fc = factorize(inst.C, FactorMethod::spectral);
  DDFactState st = init_state_ddfact(inst, fc, 1.0);
  Matrix G = build_G_ddfact(fc.F);
  for (int t = 0; t < 5; ++t) {
    st.x = xupdate_ddfact(inst, st, G);
    Matrix Y = fc.F.transpose() * st.x.asDiagonal() * fc.F - st.Psi;
    st.Z = zupdate_ddfact(inst, fc, st);
    Matrix Psi_next = st.Z - Y;
    CHECK(sym_eigen(Psi_next).values.minCoeff() > 0.0);
    multiplier_update_ddfact(inst, fc, st);
    CHECK((st.Psi - Psi_next).norm() <= 1e-10);
  }
}

TEST_CASE("xupdate_ddfact packing identity") {
  Rng rng(23);
  Matrix C = tst::random_psd(rng, 7, 4);
  FactorChoice fc = factorize(C, FactorMethod::spectral);
  Matrix G = build_G_ddfact(fc.F);
  Vector x = tst::random_vec(rng, 7);
  Vector rhs = vec_delta(fc.F.transpose() * x.asDiagonal() * fc.F,
                         std::sqrt(2.0));
  CHECK((G * x - rhs).norm() <= 1e-10 * (1 + rhs.norm()));
}

TEST_CASE("dual_bound_ddfact on C = I dominates the zero optimum") {
  MespInstance inst = mesp_of(Matrix::Identity(8, 8), 3);
  FactorChoice fc = factorize(inst.C, FactorMethod::spectral);
  auto cert = dual_bound_ddfact(inst, fc, Vector::Constant(8, 3.0 / 8));
  REQUIRE(cert.has_value());
  CHECK(cert->bound >= exhaustive_optimum(inst).value - 1e-9);
}

TEST_CASE("solve_ddfact matches the Frank-Wolfe oracle on rank-deficient C") {
  MespInstance inst = gen_mesp_rank(60, 15, 10, 31);
  FactorChoice fc = factorize(inst.C, FactorMethod::spectral);
  CHECK(fc.k == 15);
  SolveOptions opts;
  opts.time_limit_s = 90;
  BoundReport rep = solve_ddfact(inst, fc, opts);
  CHECK(rep.termination == Termination::gap_tol);
  FwResult fw =
      frank_wolfe_reference(Relaxation::ddfact, inst, &fc, 1.0, 1e-7, 200000);
  CHECK(rep.bound >= fw.value - 1e-9);
  CHECK(rep.bound - fw.value <= 0.05 + 1e-9);
}

TEST_CASE("ddfact bound invariances") {
  MespInstance inst = gen_mesp_rank(40, 12, 8, 37);
  SolveOptions opts;
  opts.time_limit_s = 60;
  opts.gap_tol = 1e-4;  // tight so both runs land on the relaxation optimum
  opts.max_iter = 200000;

  auto bound_of = [&](const MespInstance& i, FactorMethod m) {
    FactorChoice f = factorize(i.C, m);
    return solve_ddfact(i, f, opts).bound;
  };

  double base = bound_of(inst, FactorMethod::spectral);
  // scaling invariance
  for (double g : {0.1, 10.0}) {
    double scaled = bound_of(scale_instance(inst, g), FactorMethod::spectral);
    CHECK(std::abs(scaled - base) <= 1e-3);
  }
  // factorization invariance
  CHECK(std::abs(bound_of(inst, FactorMethod::cholesky_type) - base) <= 1e-3);
  CHECK(std::abs(bound_of(inst, FactorMethod::matrix_sqrt) - base) <= 1e-3);
}

TEST_CASE("ddfact bound dominates the exhaustive optimum") {
  Rng rng(41);
  for (int t = 0; t < 5; ++t) {
    Index n = 6 + static_cast<Index>(rng.below(3));
    Index s = 2 + static_cast<Index>(rng.below(2));
    MespInstance inst = mesp_of(
        tst::random_psd(rng, n) + 0.05 * Matrix::Identity(n, n), s);
    FactorChoice fc = factorize(inst.C, FactorMethod::spectral);
    SolveOptions opts;
    opts.time_limit_s = 30;
    BoundReport rep = solve_ddfact(inst, fc, opts);
    CHECK(rep.bound >= exhaustive_optimum(inst).value - 1e-9);
  }
}
