#pragma once

#include <functional>
#include <vector>

#include "convtest/linalg.hpp"

namespace convtest {

// Noise model used by the discretization builders: cdf is mandatory,
// quantile falls back to bisection on the cdf when not provided.
struct NoiseModel {
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;

  double q(double p) const;

  static NoiseModel laplace(double mu, double a);
  static NoiseModel gamma_shape2(double loc, double scale);
  static NoiseModel laplace_mixture(double mu1, double a1, double mu2, double a2);
  static NoiseModel point_mass(double at = 0.0);
};

// Deconvolution channel: A_ij = Prob{abar_j + eta in J_i} for observation
// bins J_1 = (-inf, b_1], J_i = (b_{i-1}, b_i], J_m = (b_{m-1}, inf), given
// the m-1 interior edges b.  The last bin absorbs the tail so columns sum
// to one exactly.
Mat deconvolution_channel(const Vec& signal_centers, const Vec& obs_edges,
                          const NoiseModel& noise);

// Default observation edges: b_1 = a_0 + q(delta), b_{m-1} = a_n + q(1-delta),
// equally spaced in between; m bins in total.
Vec default_obs_edges(double a0, double an, int m, double delta, const NoiseModel& noise);

// Trimmed observations zeta = max(xi, eta): m = n+1 bins,
// A_ij = delta_ij Prob{eta <= a_j} + 1_{i>j} Prob{eta in I_i}.
Mat trimmed_channel(const Vec& signal_edges, const NoiseModel& noise);

// Floors entries below eta and renormalizes columns; returns the largest
// entry perturbation so callers can report it.
struct FlooredChannel {
  Mat A;
  double perturbation = 0.0;
};
FlooredChannel floor_channel(const Mat& A, double eta = 1e-9);

}  // namespace convtest
