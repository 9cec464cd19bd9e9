#pragma once

// Problem-instance construction, transformation, ingestion and persistence:
// random design matrices, response-surface designs, covariance scaling /
// complementation / factorization, and text matrix IO.

#include <cstdint>
#include <optional>
#include <string>

#include "eb/types.hpp"

namespace eb {

// Counter-based 64-bit generator (splitmix64) so instances are bit-identical
// for a fixed seed across runs and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  double uniform();                  // [0, 1)
  double normal();                   // standard normal, Box-Muller
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

enum class DoptFamily { random_normal, linear_response, quadratic_response, file };

struct DoptInstance {
  Matrix A;  // n x m, rows are design points
  Index s = 0;
  DoptFamily family = DoptFamily::file;
  double scale = 1.0;        // family size scale (1 = paper size)
  std::uint64_t seed = 0;

  Index n() const { return A.rows(); }
  Index m() const { return A.cols(); }
  // Information matrix A' Diag(x) A.
  Matrix info_matrix(const Vector& x) const;
};

enum class MespFamily { generic, rank_truncated };

struct MespInstance {
  Matrix C;            // n x n PSD
  Index s = 0;
  double offset = 0.0;  // accumulated from scaling/complementation
  double gamma = 1.0;
  MespFamily family = MespFamily::generic;
  std::uint64_t seed = 0;

  Index n() const { return C.rows(); }
};

enum class FactorMethod { cholesky_type, spectral, matrix_sqrt };

FactorMethod factor_method_from_string(const std::string& name);
std::string to_string(FactorMethod m);

struct FactorChoice {
  FactorMethod method = FactorMethod::spectral;
  Matrix F;  // n x k with F F' = C
  Index k = 0;
};

DoptInstance gen_random_dopt(Index m, std::uint64_t seed, double scale = 1.0);
DoptInstance gen_linear_response(Index factors, Index n, std::uint64_t seed);
DoptInstance gen_quadratic_response(Index factors, Index n, std::uint64_t seed);

// Random PSD covariance of the given rank (scaled Wishart-style), for the
// rank-truncated experiment family at arbitrary sizes.
MespInstance gen_mesp_rank(Index n, Index rank, Index s, std::uint64_t seed);

enum class MatrixFormat { whitespace, csv };

Matrix load_matrix(const std::string& path, MatrixFormat format,
                   bool skip_header = false);
void save_matrix(const std::string& path, const Matrix& M, MatrixFormat format);

Matrix truncate_rank(const Matrix& C, Index r);
MespInstance complement_instance(const MespInstance& inst);
MespInstance scale_instance(const MespInstance& inst, double gamma);
FactorChoice factorize(const Matrix& C, FactorMethod method);

// Greedy pivoted-Cholesky selection of a numerically full-rank principal
// submatrix of the requested order.  Returns selected indices.
std::vector<Index> select_independent_principal_submatrix(const Matrix& C,
                                                          Index target_n);

// JSON manifest round-trip for instances (matrix stored beside the manifest).
std::string dopt_manifest_json(const DoptInstance& inst,
                               const std::string& matrix_path);
std::string mesp_manifest_json(const MespInstance& inst,
                               const std::string& matrix_path);

}  // namespace eb
