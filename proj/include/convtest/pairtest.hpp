#pragma once

#include <optional>
#include <vector>

#include "convtest/frank_wolfe.hpp"
#include "convtest/polytope.hpp"
#include "convtest/scheme.hpp"

namespace convtest {

// Pairwise composite testing problem: decide H_X (parameter in X) against
// H_Y (parameter in Y) from one product-scheme observation.  The bodies
// live over the full parameter vector; lifted bodies carry an output map.
struct PairProblem {
  ProductScheme scheme;
  ConvexBody X, Y;
  std::vector<DomainTag> tags;  // one per (expanded) factor; empty = derived default

  void validate() const;  // throws on shape errors or check_set failures
};

struct PairSolution {
  ProductScheme scheme;        // expanded
  Vec x_star, y_star;          // ambient parameter points
  Vec x_raw, y_raw;            // lifted-variable points (equal to ambient when unlifted)
  double opt = 0.0;            // value of sum_k repeat_k psi_k at (x*, y*)
  double eps_star = 1.0;       // exp(opt/2)
  Detector detector;
  double gap = 0.0;            // first-order residual delta (= 2x FW gap)
  double certified_eps = 1.0;  // delta-inflated risk bound
  double risk_x_bound = 1.0;   // e^{a} eps_star (may exceed 1: vacuous)
  double risk_y_bound = 1.0;   // e^{-a} eps_star
  long long iters = 0;
  bool converged = true;
  bool trivial_overlap = false;  // X and Y intersect: opt ~ 0, detector ~ 0
};

// Maximizes sum_k repeat_k psi_k over X x Y and assembles the detector at
// the solution.  Overlapping X, Y come back flagged, not as an error.
// Throws EmptySetError when a hypothesis set is empty.
struct EmptySetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
PairSolution solve_pair(const PairProblem& p, const FWConfig& cfg = {});

// Skews the detector: phi - a, with per-side bounds e^{a} eps*, e^{-a} eps*.
PairSolution shift_detector(const PairSolution& s, double a);

enum class PairVerdict { AcceptX, AcceptY };
PairVerdict decide(const PairSolution& s, const Vec& obs);  // accept X iff phi >= 0

// Smallest K with eps_star^K <= eps_target; nullopt when eps_star >= 1.
std::optional<long long> repeated_plan(double eps_star, double eps_target);

// K+ = ceil(2 Kbar / (1 - 2 ln 2 / ln(1/eps))), valid for eps in (0, 1/4).
long long near_opt_sample_size(double eps, long long kbar);

// Scheme-appropriate delta-inflated risk bound for the delivered detector.
double certified_risk(const PairSolution& s);

}  // namespace convtest
