#pragma once

#include <vector>

#include "convtest/channels.hpp"
#include "convtest/pairtest.hpp"

namespace convtest {

// Testing a linear functional of a latent discrete distribution from
// indirect observations: L observers with column-stochastic channels A^l,
// K_l i.i.d. draws each; hypotheses g'x <= alpha - rho vs g'x >= alpha + rho
// over x in a convex subset of the simplex.
struct FunctionalSpec {
  std::vector<Mat> channels;      // A^l, m_l x n, entrywise positive on X
  std::vector<long long> repeats;  // K_l
  PolytopeSpec latent_set;        // X, subset of the n-simplex
  Vec g;
  double alpha = 0.5;

  void validate() const;
};

struct ResolutionResult {
  double rho = 0.0;       // rho[eps]
  double rho_max = 0.0;
  double theta = 0.0;     // vartheta(eps), the near-optimality factor
  PairSolution test;      // product-scheme detector at rho
  bool degenerate = false;  // rho[eps] reached rho_max
};

// rho[eps] by bisection on the separation parameter; the inner feasibility
// Opt[r] >= ln eps is a product-Discrete pair solve through the channels.
ResolutionResult functional_resolution(const FunctionalSpec& spec, double eps,
                                       const FWConfig& cfg = {}, double tol = 1e-6);

}  // namespace convtest
