#pragma once

#include <optional>
#include <vector>

#include "convtest/pairtest.hpp"
#include "convtest/polytope.hpp"

namespace convtest {

// M/M/s/s+b queue observed at integer times: n = s+b+1 states, tridiagonal
// rate matrix with [L]_{j-1,j} = s(j) mu, [L]_{j+1,j} = lambda,
// s(j) = min(j-1, s); S = expm(L) is column-stochastic.
struct QueueChain {
  Mat L, S;
  int n = 0;
};
QueueChain queueing_chain(double lambda, double mu, int s, int b);

// Two simple hypotheses on a fully observed chain: the trajectory Hellinger
// affinity is eps*(K) = max_{p in X} sum_j (1' M^K)_j p_j with
// M_ij = sqrt(S1_ij S2_ij); the detector is the plain log-likelihood table
// phi(i <- j) = 1/2 ln(S1_ij / S2_ij).
struct MarkovPairPlan {
  std::vector<double> eps_curve;  // eps*(K), K = 1..
  std::optional<long long> k_min;
  Mat detector;  // phi(i,j), destination i, source j
};
MarkovPairPlan markov_pair_plan(const Mat& S1, const Mat& S2, const PolytopeSpec& X,
                                double eps_target, int k_cap = 100000);

enum class MarkovUncertainty { TransitionCones, NormBall };

// Hidden-observation Markov testing data.  TransitionCones: per-column
// interval cones (1 +/- rho) around the nominal transition matrix, with an
// m x n^2 channel on state transitions (column (j-1)n + i is transition
// source j -> destination i).  NormBall: ||S - Q||_{1,1} <= rho with an
// m x n channel on states, observed every kappa steps.
struct MarkovSpec {
  MarkovUncertainty variant = MarkovUncertainty::NormBall;
  Mat nominal;  // S (cones) or Q (norm ball), column-stochastic
  double rho = 0.0;
  int kappa = 1;
  Mat channel;  // entrywise positive, column-stochastic (floor upstream)

  void validate() const;
};

// The observation-distribution set Z as a lifted polytope with an output
// map onto the simplex of observation distributions.
ConvexBody markov_Z_sets(const MarkovSpec& spec);

// Channel helpers for the transition-observation model.
// Direct transition observations: channel = I_{n^2}.
Mat transition_identity_channel(int n);
// Observation (bin(source), bin(destination)) from a state channel C (m x n):
// returns an m^2 x n^2 matrix.
Mat transition_pair_channel(const Mat& state_channel);
// 0/1 state channel from a partition of 1..n into bins.
Mat bin_channel(const std::vector<std::vector<int>>& bins, int n);

}  // namespace convtest
