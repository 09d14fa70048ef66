#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "convtest/linalg.hpp"

namespace convtest {

// Pairwise detector evaluations are passed around as matrices of values
// phi_ij(omega); the callable form wraps whatever observation type the
// caller uses.
using DetectorFn = std::function<double(const Vec&)>;

// Pairwise detectors with their risks.  Bipartite (m x n) for union
// problems; square with the antisymmetry convention phi_ij = -phi_ji for
// multiple-hypothesis problems (then risks has zero diagonal).
struct DetectorMatrix {
  int rows = 0, cols = 0;
  Mat risks;  // eps_ij > 0 (zero diagonal allowed in the square case)
  std::vector<std::vector<DetectorFn>> dets;
  bool antisymmetric = false;

  Mat eval_all(const Vec& obs) const;
  void validate() const;
};

enum class AggregationMode { MaxMin, MinMax, Saddle };

// Union test over X = U X_i vs Y = U Y_j assembled from an m x n positive
// risk matrix: shifts a_ij = ln(h_j/g_i) from the leading singular pair and
// phi = max_i min_j [phi_ij - a_ij].  Risk bound ||E||_{2,2}.
struct UnionTest {
  Mat shifts;        // a_ij
  double eps = 0.0;  // ||E||_{2,2}
  Vec g, h;

  // Aggregates a matrix of detector values; Saddle solves the small matrix
  // game exactly and is clamped into [maxmin, minmax].
  double aggregate(const Mat& phi_values, AggregationMode mode) const;
};
UnionTest union_assemble(const Mat& E);

// Skew-symmetric shift matrix with the certified bound it attains.
struct ShiftPlan {
  Mat alpha;            // alpha_ij = -alpha_ji
  double eps = 0.0;     // attained bound
  double gap = 0.0;     // optimality gap (0 for the closed-form cases)
  bool all_close = false;
  Vec g;                // Perron vector when the closed form applies
};

// Importance-weighted multiple testing: Ebar = [p_i eps_ij], shifts from
// the Perron vector, bound eps_* = rho(Ebar); all weighted row sums
// equalize at rho.
ShiftPlan weighted_shifts(const Mat& risks, const Vec& importance);

// Closeness relation over M hypotheses: C(i,j) true means "H_j is close to
// H_i" (need not be symmetric).  Diagonal must be all true.
struct ClosenessRelation {
  int M = 0;
  std::vector<std::vector<bool>> close;

  static ClosenessRelation diagonal(int M);
  static ClosenessRelation from_partition(const std::vector<std::vector<int>>& blocks, int M);
  bool is_partition_induced() const;
  void validate() const;
};

// Minimizes max_i sum_{j:(i,j) not in C} eps_ij e^{alpha_ij} over
// skew-symmetric alpha.  Partition-induced relations use the closed-form
// Perron solution on the zeroed matrix D; general relations run a Polyak
// subgradient method warm-started from it.
ShiftPlan closeness_shifts(const Mat& risks, const ClosenessRelation& C);

// Test T: accept H_i iff phi_ij(omega) - alpha_ij > 0 for every j with
// (i,j) outside C.  Returns accepted indices (0-based).
std::vector<int> run_multitest(const Mat& phi_values, const Mat& alpha,
                               const ClosenessRelation& C);

// Multiple-unions test over a partition: at most one block accepted.
struct MultipleUnionsResult {
  std::optional<int> accepted_block;
  double eps = 0.0;  // ||D||_{2,2}
  std::vector<int> accepted_atoms;
};
MultipleUnionsResult multiple_unions(const std::vector<std::vector<int>>& blocks,
                                     const Mat& risks, const Mat& phi_values);

// Smallest K with K >= 2 ln(M/eps) / (ln(1/eps) - 2 ln 2) * Kbar.
long long multi_sample_bound(double eps, int M, long long kbar);

}  // namespace convtest
