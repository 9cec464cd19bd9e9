#include "eb/instances.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "eb/matcore.hpp"

namespace eb {

std::uint64_t Rng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  while (u1 == 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // rejection sampling to avoid modulo bias
  const std::uint64_t limit = bound * ((~0ULL) / bound);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

Matrix DoptInstance::info_matrix(const Vector& x) const {
  return A.transpose() * x.asDiagonal() * A;
}

namespace {

bool full_column_rank(const Matrix& A) {
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  return qr.rank() == A.cols();
}

}  // namespace

DoptInstance gen_random_dopt(Index m, std::uint64_t seed, double scale) {
  if (m < 2) throw std::invalid_argument("gen_random_dopt: m must be >= 2");
  if (scale <= 0.0) throw std::invalid_argument("gen_random_dopt: scale must be > 0");
  const Index n = static_cast<Index>(std::llround(1000.0 * m * scale));
  const Index s = 2 * m;
  if (n <= s)
    throw std::invalid_argument("gen_random_dopt: scale too small, n <= s");
  Rng rng(seed);
  for (int attempt = 0; attempt < 5; ++attempt) {
    Matrix A(n, m);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) A(i, j) = rng.normal();
    if (full_column_rank(A)) {
      DoptInstance inst;
      inst.A = std::move(A);
      inst.s = s;
      inst.family = DoptFamily::random_normal;
      inst.scale = scale;
      inst.seed = seed;
      return inst;
    }
  }
  throw std::runtime_error("gen_random_dopt: rank-deficient after 5 retries");
}

namespace {

// Sample `count` distinct values in [0, space) without materializing the
// space (Floyd's algorithm wants a set; space can be 2^F so use hashing).
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t space,
                                                      std::uint64_t count,
                                                      Rng& rng) {
  std::vector<std::uint64_t> out;
  out.reserve(count);
  if (count * 2 >= space) {
    // dense case: partial Fisher-Yates
    std::vector<std::uint64_t> all(space);
    for (std::uint64_t i = 0; i < space; ++i) all[i] = i;
    for (std::uint64_t i = 0; i < count; ++i) {
      std::uint64_t j = i + rng.below(space - i);
      std::swap(all[i], all[j]);
    }
    out.assign(all.begin(), all.begin() + count);
  } else {
    while (out.size() < count) {
      std::uint64_t v = rng.below(space);
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
  }
  return out;
}

}  // namespace

DoptInstance gen_linear_response(Index factors, Index n, std::uint64_t seed) {
  if (factors < 1 || factors > 62)
    throw std::invalid_argument("gen_linear_response: bad factor count");
  const std::uint64_t space = 1ULL << factors;
  if (static_cast<std::uint64_t>(n) > space)
    throw std::invalid_argument("gen_linear_response: n exceeds 2^F design points");
  const Index m = 1 + factors;
  Rng rng(seed);
  auto codes = sample_without_replacement(space, static_cast<std::uint64_t>(n), rng);
  Matrix A(n, m);
  for (Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    for (Index f = 0; f < factors; ++f)
      A(i, 1 + f) = static_cast<double>((codes[i] >> f) & 1ULL);
  }
  DoptInstance inst;
  inst.A = std::move(A);
  inst.s = 2 * m;
  inst.family = DoptFamily::linear_response;
  inst.seed = seed;
  if (!full_column_rank(inst.A))
    throw std::runtime_error("gen_linear_response: sampled design is rank deficient");
  return inst;
}

DoptInstance gen_quadratic_response(Index factors, Index n, std::uint64_t seed) {
  if (factors < 1 || factors > 39)
    throw std::invalid_argument("gen_quadratic_response: bad factor count");
  const double space_d = std::pow(3.0, static_cast<double>(factors));
  if (static_cast<double>(n) > space_d)
    throw std::invalid_argument("gen_quadratic_response: n exceeds 3^F design points");
  const std::uint64_t space = static_cast<std::uint64_t>(space_d);
  const Index p = (factors + 1) / 4;  // factors whose pairwise products enter
  const Index pairs = p * (p - 1) / 2;
  const Index m = 1 + factors + pairs;
  Rng rng(seed);
  auto codes = sample_without_replacement(space, static_cast<std::uint64_t>(n), rng);
  Matrix A(n, m);
  for (Index i = 0; i < n; ++i) {
    std::uint64_t c = codes[i];
    std::vector<double> lev(factors);
    for (Index f = 0; f < factors; ++f) {
      lev[f] = static_cast<double>(c % 3);
      c /= 3;
    }
    Index col = 0;
    A(i, col++) = 1.0;
    for (Index f = 0; f < factors; ++f) A(i, col++) = lev[f];
    for (Index a = 0; a < p; ++a)
      for (Index b = a + 1; b < p; ++b) A(i, col++) = lev[a] * lev[b];
  }
  DoptInstance inst;
  inst.A = std::move(A);
  inst.s = 2 * m;
  inst.family = DoptFamily::quadratic_response;
  inst.seed = seed;
  if (!full_column_rank(inst.A))
    throw std::runtime_error("gen_quadratic_response: sampled design is rank deficient");
  return inst;
}

MespInstance gen_mesp_rank(Index n, Index rank, Index s, std::uint64_t seed) {
  if (rank < 1 || rank > n) throw std::invalid_argument("gen_mesp_rank: bad rank");
  if (s < 1 || s >= n || s > rank)
    throw std::invalid_argument("gen_mesp_rank: need 1 <= s <= rank, s < n");
  Rng rng(seed);
  Matrix F(n, rank);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < rank; ++j) F(i, j) = rng.normal();
  MespInstance inst;
  inst.C = (F * F.transpose()) / static_cast<double>(rank);
  inst.s = s;
  inst.family = MespFamily::rank_truncated;
  inst.seed = seed;
  return inst;
}

namespace {

std::vector<double> parse_line(const std::string& line, MatrixFormat format,
                               int lineno) {
  std::vector<double> row;
  std::string token;
  auto push = [&](const std::string& t) {
    if (t.empty()) return;
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("parse error at line " + std::to_string(lineno) +
                               ": non-numeric token '" + t + "'");
    }
    if (pos != t.size())
      throw std::runtime_error("parse error at line " + std::to_string(lineno) +
                               ": non-numeric token '" + t + "'");
    row.push_back(v);
  };
  if (format == MatrixFormat::csv) {
    std::stringstream ss(line);
    while (std::getline(ss, token, ',')) {
      // trim
      auto b = token.find_first_not_of(" \t\r");
      auto e = token.find_last_not_of(" \t\r");
      push(b == std::string::npos ? "" : token.substr(b, e - b + 1));
    }
  } else {
    std::stringstream ss(line);
    while (ss >> token) push(token);
  }
  return row;
}

}  // namespace

Matrix load_matrix(const std::string& path, MatrixFormat format,
                   bool skip_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && skip_header) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(parse_line(line, format, lineno));
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw std::runtime_error("ragged row at line " + std::to_string(lineno));
  }
  if (rows.empty()) throw std::runtime_error("empty matrix file " + path);
  Matrix M(rows.size(), rows.front().size());
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = rows[i][j];
  return M;
}

void save_matrix(const std::string& path, const Matrix& M, MatrixFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const char sep = format == MatrixFormat::csv ? ',' : ' ';
  out.precision(17);
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out << sep;
      out << M(i, j);
    }
    out << '\n';
  }
}

Matrix truncate_rank(const Matrix& C, Index r) {
  if (r < 1 || r > C.rows()) throw std::invalid_argument("truncate_rank: bad r");
  SymEigen eig = sym_eigen(C);
  Vector lam = eig.values;
  for (Index i = r; i < lam.size(); ++i) lam[i] = 0.0;
  lam = lam.cwiseMax(0.0);
  return eig.basis * lam.asDiagonal() * eig.basis.transpose();
}

MespInstance complement_instance(const MespInstance& inst) {
  SymEigen eig = sym_eigen(inst.C);
  const double top = eig.values.cwiseAbs().maxCoeff();
  if (eig.values.minCoeff() <= 1e-10 * top)
    throw std::runtime_error("ComplementRequiresFullRank: covariance is singular");
  double ldet = eig.values.array().log().sum();
  MespInstance out = inst;
  out.C = eig.basis * eig.values.cwiseInverse().asDiagonal() * eig.basis.transpose();
  out.s = inst.n() - inst.s;
  out.offset = inst.offset + ldet;
  return out;
}

MespInstance scale_instance(const MespInstance& inst, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("scale_instance: gamma must be > 0");
  MespInstance out = inst;
  out.C = gamma * inst.C;
  out.offset = inst.offset - static_cast<double>(inst.s) * std::log(gamma);
  return out;
}

FactorMethod factor_method_from_string(const std::string& name) {
  if (name == "chol" || name == "cholesky") return FactorMethod::cholesky_type;
  if (name == "spectral") return FactorMethod::spectral;
  if (name == "sqrt") return FactorMethod::matrix_sqrt;
  throw std::invalid_argument("unknown factorization method: " + name);
}

std::string to_string(FactorMethod m) {
  switch (m) {
    case FactorMethod::cholesky_type: return "chol";
    case FactorMethod::spectral: return "spectral";
    case FactorMethod::matrix_sqrt: return "sqrt";
  }
  return "?";
}

FactorChoice factorize(const Matrix& C, FactorMethod method) {
  SymEigen eig = sym_eigen(C);
  const Index n = C.rows();
  const double top = std::max(eig.values.maxCoeff(), 0.0);
  Index rank = 0;
  for (Index i = 0; i < n; ++i)
    if (eig.values[i] > 1e-10 * std::max(top, 1e-300)) ++rank;

  FactorChoice out;
  out.method = method;
  if (method == FactorMethod::matrix_sqrt) {
    out.k = n;
    out.F = eig.basis * eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
            eig.basis.transpose();
    return out;
  }
  out.k = rank;
  Matrix S(n, rank);
  for (Index j = 0; j < rank; ++j)
    S.col(j) = std::sqrt(eig.values[j]) * eig.basis.col(j);
  if (method == FactorMethod::spectral) {
    out.F = std::move(S);
    return out;
  }
  // cholesky-type: lower-trapezoidal F with F F' = C, via LQ of the spectral
  // factor (QR of S').
  Eigen::HouseholderQR<Matrix> qr(S.transpose());
  Matrix R = qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
  out.F = R.transpose();  // n x rank lower trapezoidal
  return out;
}

std::vector<Index> select_independent_principal_submatrix(const Matrix& C,
                                                          Index target_n) {
  const Index n = C.rows();
  if (target_n < 1 || target_n > n)
    throw std::invalid_argument("select_independent_principal_submatrix: bad target");
  // Greedy pivoted Cholesky on the diagonal of the Schur complement.
  Vector d = C.diagonal();
  Matrix L = Matrix::Zero(n, static_cast<Index>(target_n));
  std::vector<Index> picked;
  std::vector<bool> used(n, false);
  const double tol = 1e-12 * std::max(d.maxCoeff(), 1e-300);
  for (Index step = 0; step < target_n; ++step) {
    Index best = -1;
    double bestd = tol;
    for (Index i = 0; i < n; ++i)
      if (!used[i] && d[i] > bestd) {
        bestd = d[i];
        best = i;
      }
    if (best < 0)
      throw std::runtime_error(
          "select_independent_principal_submatrix: rank exhausted at " +
          std::to_string(picked.size()));
    used[best] = true;
    picked.push_back(best);
    const double piv = std::sqrt(d[best]);
    for (Index i = 0; i < n; ++i) {
      if (used[i]) continue;
      double v = C(i, best) - L.row(i).head(step).dot(L.row(best).head(step));
      L(i, step) = v / piv;
      d[i] -= L(i, step) * L(i, step);
    }
    L(best, step) = piv;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::string dopt_manifest_json(const DoptInstance& inst,
                               const std::string& matrix_path) {
  nlohmann::json j;
  j["kind"] = "dopt";
  switch (inst.family) {
    case DoptFamily::random_normal: j["family"] = "random"; break;
    case DoptFamily::linear_response: j["family"] = "linear"; break;
    case DoptFamily::quadratic_response: j["family"] = "quadratic"; break;
    case DoptFamily::file: j["family"] = "file"; break;
  }
  j["n"] = inst.n();
  j["m"] = inst.m();
  j["s"] = inst.s;
  j["seed"] = inst.seed;
  j["scale"] = inst.scale;
  j["source_path"] = matrix_path;
  return j.dump(2);
}

std::string mesp_manifest_json(const MespInstance& inst,
                               const std::string& matrix_path) {
  nlohmann::json j;
  j["kind"] = "mesp";
  j["n"] = inst.n();
  j["s"] = inst.s;
  j["seed"] = inst.seed;
  j["gamma"] = inst.gamma;
  j["offset"] = inst.offset;
  j["source_path"] = matrix_path;
  return j.dump(2);
}

}  // namespace eb
