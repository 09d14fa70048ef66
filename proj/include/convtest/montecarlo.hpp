#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "convtest/linalg.hpp"
#include "convtest/rng.hpp"
#include "convtest/scheme.hpp"

namespace convtest {

struct RiskEstimate {
  long long n = 0;
  long long rejections = 0;
  double eps_hat = 0.0;
  double ci_lo = 0.0, ci_hi = 1.0;  // exact binomial (Clopper-Pearson) 95% CI
};

struct RiskReport {
  RiskEstimate x_side, y_side;
  double bound = 1.0;  // theoretical certificate the run is checked against
  std::uint64_t seed = 0, stream = 0;
  long long replications = 0;
};

// Truth under which observations are drawn: either a fixed parameter point
// or a caller-supplied sampler over the hypothesis set (mixtures, convex
// hulls).
struct TruthSpec {
  Vec point;
  std::function<Vec(Philox&)> sampler;  // takes precedence when set
};

// Empirical rejection frequency of `rejects_truth` over N replications.
// Replication r derives its randomness from (seed, stream0 + r), so the
// result is independent of how replications are partitioned over workers;
// counts are merged exactly.
RiskEstimate estimate_risk(const ProductScheme& scheme, const TruthSpec& truth,
                           const std::function<bool(const Vec&)>& rejects_truth,
                           long long N, std::uint64_t seed, std::uint64_t stream0,
                           int workers = 0);

// Clopper-Pearson two-sided interval at the given confidence.
void clopper_pearson(long long k, long long n, double conf, double& lo, double& hi);

// Markov chain trajectory: state_0 ~ initial, state_t ~ Col_{state_{t-1}}[S];
// emitted symbol ~ Col_{state_t}[channel] (channel empty => states emitted).
// States/symbols are 1-based.
std::vector<int> simulate_chain(const Mat& S, const Vec& initial, int K,
                                const Mat& channel, Philox& rng);

struct AffinityEstimate {
  double value = 0.0;      // estimate of sum_w min(p1^K, p2^K)
  double std_error = 0.0;
  long long n = 0;
};

// Monte Carlo estimate of the testing affinity between the K-fold products
// of two discrete distributions: symmetric average of
// E_{p1}[min(1, p2/p1)] and E_{p2}[min(1, p1/p2)]; unbiased for sum min.
AffinityEstimate affinity_lower_bound(const Vec& p1, const Vec& p2, int K, long long N,
                                      std::uint64_t seed, std::uint64_t stream0);

}  // namespace convtest
