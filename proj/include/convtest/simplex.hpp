#pragma once

#include <vector>

#include "convtest/linalg.hpp"

namespace convtest {

// Dense bounded-variable simplex over
//     min c'z  s.t.  M z = b,  L <= z <= U   (all bounds finite).
// Dantzig pricing with lowest-index tie-breaking, falling back to Bland's
// rule when degenerate pivots stall, which guarantees termination.  The
// tableau B^{-1}M is kept explicitly and refactorized periodically from an
// LU of the basis to hold the 1e-9 feasibility contract.
class BoundedSimplex {
 public:
  enum class Status { Optimal, Infeasible };

  // Installs the problem and solves phase 1.  After construction (and when
  // phase 1 succeeded) repeated solve(c) calls reuse the current basis.
  BoundedSimplex(const Mat& M, const Vec& b, const Vec& L, const Vec& U);

  bool feasible() const { return feasible_; }
  int num_columns() const { return n_; }

  // Minimizes c'z from the current basis.  Requires feasible().
  Status solve(const Vec& c, Vec& z, double& value);

  // Max |M z - b| over rows for the last solution.
  double residual(const Vec& z) const;

 private:
  enum class VarState : char { Basic, AtLower, AtUpper };

  void add_artificials();
  void refactorize();
  void compute_reduced_costs(const Vec& c);
  int price(const Vec& c, bool bland) const;
  bool eligible(int j) const;
  int run(const Vec& c);  // returns pivot count
  void pivot(int row, int col);
  Vec current_point() const;
  double objective(const Vec& c) const;

  int m_ = 0;        // rows
  int n_ = 0;        // columns excluding artificials
  int ncol_ = 0;     // columns including artificials
  Mat M_;            // m x ncol constraint matrix
  Vec b_, L_, U_;
  Mat T_;            // B^{-1} M
  Vec xB_;           // values of basic variables
  std::vector<int> basis_;        // size m
  std::vector<VarState> state_;   // size ncol
  Vec d_;            // reduced costs
  bool feasible_ = false;
  long long pivots_since_refactor_ = 0;

  static constexpr double kPivTol = 1e-11;
  static constexpr double kFeasTol = 1e-9;
  static constexpr int kRefactorPeriod = 400;
};

}  // namespace convtest
