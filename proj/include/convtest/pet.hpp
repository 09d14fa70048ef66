#pragma once

#include <cstdint>
#include <stdexcept>

#include "convtest/pairtest.hpp"

namespace convtest {

// Toy 2-D PET geometry: a square field of view of side^2 pixels inscribed
// in a ring of `arcs` detector cells; P(bin, pixel) is the probability that
// a uniformly oriented line of response from the pixel is registered by the
// (unordered) arc pair indexed by bin.  Estimated by chord sampling with a
// fixed seed; rays hitting one arc twice are dropped as unregistered.
Mat pet_geometry(int side, int arcs, long long rays_per_pixel = 10000,
                 std::uint64_t seed = 20240901);

// Density class: lambda >= floor, mean over pixels <= R, discrete Laplacian
// bounded by L (zero padding outside the field).
PolytopeSpec pet_density_class(int side, double laplacian_bound, double mean_bound,
                               double floor = 0.0);

// Mean of lambda over a square spot (1-based corner, spot side s).
Vec pet_spot_functional(int side, int corner_row, int corner_col, int spot);

struct IndistinguishableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PetPlan {
  double t_star = 0.0;  // minimal observation time for risk <= eps
  double h = 0.0;       // min over feasible pairs of sum_i (sqrt[P l] - sqrt[P l'])^2
  Vec lambda1, lambda2;  // hardest-to-distinguish densities
  Detector detector;     // Poisson detector at t = t_star
  PairSolution inner;
};

// Minimal observation time: t* = 2 ln(1/eps) / H with H minimized over
// {g'l <= alpha} x {g'l >= alpha + rho} inside the density class.
PetPlan pet_plan(const Mat& P, const PolytopeSpec& density_class, const Vec& g,
                 double alpha, double rho, double eps, const FWConfig& cfg = {});

}  // namespace convtest
