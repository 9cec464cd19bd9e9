#pragma once

// Cross-cutting certification utilities: a Frank-Wolfe reference oracle for
// the relaxations whose feasible region is the capped simplex (its linear
// maximization step is exact top-s selection), golden-section gamma search,
// a greedy + 1-swap integer lower bound, and exhaustive enumeration for
// small instances.

#include <functional>
#include <vector>

#include "eb/instances.hpp"
#include "eb/types.hpp"

namespace eb {

struct IntegerSolution {
  std::vector<Index> support;  // sorted, size s
  double value = 0.0;          // ldet of the selected principal submatrix
};

struct FwResult {
  double value = 0.0;  // best primal value seen (lower bound on the optimum)
  double gap = 0.0;    // last Frank-Wolfe gap
  long iterations = 0;
  bool converged = false;
};

// Conditional gradient on the capped simplex {0 <= x <= 1, e'x = s} with
// step 2/(t+2); exits when the FW gap <g, v - x> drops below tol.
FwResult frank_wolfe_reference(Relaxation relaxation, const MespInstance& inst,
                               const FactorChoice* fc = nullptr,
                               double gamma = 1.0, double tol = 1e-6,
                               long max_iter = 200000);
FwResult frank_wolfe_reference_dopt(const DoptInstance& inst, double tol = 1e-6,
                                    long max_iter = 200000);

struct GammaSearchResult {
  double gamma_star = 1.0;
  double bound_star = 0.0;
};

// Golden-section minimization of bound_fn over log10(gamma) in [lo, hi].
// Failed evaluations count as +inf; the best gamma seen is returned, and
// gamma = 1 is always probed when it lies in the bracket.
GammaSearchResult gamma_search(const std::function<double(double)>& bound_fn,
                               double lo_log10 = -4.0, double hi_log10 = 4.0,
                               double tol_log10 = 1e-2);

// Greedy construction by marginal ldet gain, then 1-swap local search;
// deterministic with lowest-index tie-breaking.
IntegerSolution local_search_lb(const MespInstance& inst);
IntegerSolution local_search_lb(const DoptInstance& inst);

// Exhaustive optima over all (n choose s) supports; intended for small n.
IntegerSolution exhaustive_optimum(const MespInstance& inst);
IntegerSolution exhaustive_optimum(const DoptInstance& inst);

// ldet of the principal submatrix C[S, S] plus the instance offset;
// -inf when singular.
double support_value(const MespInstance& inst, const std::vector<Index>& S);
double support_value(const DoptInstance& inst, const std::vector<Index>& S);

struct GapRecord {
  double bound = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;  // absolute: bound - lower_bound
};

GapRecord gap_report(const BoundReport& report, const IntegerSolution& lb);

// Visit every s-subset of {0..n-1} in lexicographic order.
void for_each_support(Index n, Index s,
                      const std::function<void(const std::vector<Index>&)>& fn);

}  // namespace eb
