#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace eb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Thrown when a Cholesky-based routine meets a matrix that is not positive
// definite.  Solvers catch this during early iterations and treat the
// objective as -inf there.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(Index pivot)
      : std::runtime_error("matrix is not positive definite (pivot " +
                           std::to_string(pivot) + ")"),
        pivot_(pivot) {}
  Index pivot() const { return pivot_; }

 private:
  Index pivot_;
};

class NotInDomain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Relaxation { nat, linx, ddfact, bqp };

std::string to_string(Relaxation r);

enum class Termination { gap_tol, iter_limit, time_limit };

std::string to_string(Termination t);

// Options shared by all solvers.
struct SolveOptions {
  double gap_tol = 0.05;
  double feas_tol = 1e-5;
  long max_iter = 1000000;
  double time_limit_s = 3600.0;
  double rho = 0.0;  // 0 means: pick a family default
  long cert_period = 50;
  std::uint64_t seed = 0;
  // BQP only: first iteration at which certificates are attempted.
  long cert_start = 300;
  bool collect_trace = false;
};

struct TracePoint {
  long iter;
  double time_s;
  double primal;
  double bound;
  double gap;
  double res_primal;
  double res_dual;
};

struct BoundReport {
  Relaxation relaxation = Relaxation::nat;
  double bound = 0.0;
  double primal_value = 0.0;
  double dual_gap = 0.0;
  long iterations = 0;
  double wall_time_s = 0.0;
  Termination termination = Termination::iter_limit;
  double rho = 0.0;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  std::map<std::string, long> event_counters;
  std::vector<TracePoint> trace;
  // Best feasible point seen at certification time.
  Vector x_feas;

  std::string to_json() const;
};

}  // namespace eb
