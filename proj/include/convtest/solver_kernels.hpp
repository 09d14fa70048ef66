#pragma once

#include <functional>

#include "convtest/linalg.hpp"

namespace convtest {

// Matrix exponential by scaling-and-squaring with the degree-13 Pade
// approximant.  For transition rate matrices (zero column sums, nonnegative
// off-diagonal) the result is column-stochastic to 1e-10.
Mat expm(const Mat& L);

struct SingularTriple {
  double sigma = 0.0;  // ||E||_{2,2}
  Vec g, h;            // nonnegative, unit 2-norm, E h = sigma g, E' g = sigma h
};

// Leading singular triple of an entrywise-nonnegative matrix via power
// iteration (Rayleigh stopping, all-ones start).  Throws on a zero matrix.
SingularTriple spectral_norm_nonneg(const Mat& E);

struct PerronPair {
  double rho = 0.0;  // Perron-Frobenius eigenvalue
  Vec g;             // strictly positive eigenvector, unit 2-norm
};

// Perron root and positive eigenvector of a nonnegative matrix with zero
// diagonal and positive off-diagonal entries (n >= 2).  A diagonal shift
// keeps the dominant eigenvalue simple for the power iteration.
PerronPair perron_positive(const Mat& Ebar);

// Largest r in [r_lo, r_hi] certified feasible, for a monotone nonincreasing
// feasibility predicate.  Throws std::runtime_error when feasible(r_lo) is
// false.  Ties resolve toward the feasible side.
double bisect_max_param(const std::function<bool(double)>& feasible, double r_lo,
                        double r_hi, double tol);

}  // namespace convtest
