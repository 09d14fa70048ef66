#pragma once

#include <limits>
#include <vector>

#include "convtest/frank_wolfe.hpp"
#include "convtest/polytope.hpp"

namespace convtest {

enum class SensorCase { Gaussian, Poisson };

// Event detection with nuisance: observation mean A(s+v), nuisance v in V,
// event signal s = r e[i] with rho_i <= |r| <= R.
struct DetectionSpec {
  Mat A;                    // m x n sensing matrix
  PolytopeSpec nuisance;    // V; symmetric about 0 for the Gaussian case
  std::vector<Vec> signatures;
  double amplitude_cap = 0.0;  // R
  double sigma = 1.0;          // Gaussian noise level
  double eps = 0.05;           // target risk

  void validate(SensorCase which) const;
};

struct AffineDetector {
  Vec xi;
  double alpha = 0.0;
  double eval(const Vec& omega) const { return xi.dot(omega) - alpha; }
};

// Assembled detection rule: accept H0 (no event) iff eval(omega) >= 0.
// Gaussian: min over i and both signs (derived by negating the linear
// part); Poisson: min over i plus ln(n)/2.
struct SensorTest {
  SensorCase which = SensorCase::Gaussian;
  std::vector<AffineDetector> parts;  // one per signature (chi = +1)
  double log_shift = 0.0;

  double eval(const Vec& omega) const;
  bool accepts_null(const Vec& omega) const { return eval(omega) >= 0.0; }
};

constexpr double kRhoInfeasible = std::numeric_limits<double>::infinity();

struct SensorProfile {
  Vec rho;        // per-signature epsilon-rate of the assembled test
  Vec rho_star;   // baseline (single-pair oracle) profile
  SensorTest test;
  double kappa = 0.0;  // rate-optimality factor for (eps, n)
};

// Per-signature bisection over the amplitude with the inner convex
// feasibility solved by Frank-Wolfe; entries are kRhoInfeasible when no
// amplitude <= R reaches the detection threshold.
SensorProfile sensor_rate_profile(const DetectionSpec& spec, SensorCase which,
                                  const FWConfig& cfg = {});

enum class RateFormula { Poisson, Gaussian, Functional };

// kappa_n(eps): Poisson ln(n/eps^2)/ln(1/(4 eps)); Gaussian
// ErfInv(eps/4n)/(2 ErfInv(eps/2)) + 1/2; Functional (vartheta)
// 2 ln(1/eps)/ln(1/(4 eps)) (n ignored).
double rate_factor(double eps, int n, RateFormula which);

}  // namespace convtest
