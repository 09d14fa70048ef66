#include "convtest/pet.hpp"

#include <cmath>

#include "convtest/rng.hpp"

namespace convtest {

Mat pet_geometry(int side, int arcs, long long rays_per_pixel, std::uint64_t seed) {
  if (side < 1 || arcs < 2) throw std::invalid_argument("pet_geometry: bad geometry");
  const int npix = side * side;
  const int nbin = arcs * (arcs - 1) / 2;
  const double radius = std::sqrt(2.0);  // ring circumscribing the [-1,1]^2 field
  const double two_pi = 6.283185307179586477;
  Mat P = Mat::Zero(nbin, npix);
  for (int pr = 0; pr < side; ++pr)
    for (int pc = 0; pc < side; ++pc) {
      int j = pr * side + pc;
      Philox rng(seed, static_cast<std::uint64_t>(j));
      Eigen::VectorXi hits = Eigen::VectorXi::Zero(nbin);
      for (long long ray = 0; ray < rays_per_pixel; ++ray) {
        double x = -1.0 + (pc + rng.next_double()) * 2.0 / side;
        double y = -1.0 + (pr + rng.next_double()) * 2.0 / side;
        double theta = 3.141592653589793238 * rng.next_double();
        double dx = std::cos(theta), dy = std::sin(theta);
        // line (x,y) + t (dx,dy) meets the circle of radius sqrt(2)
        double b = x * dx + y * dy;
        double c = x * x + y * y - radius * radius;
        double disc = b * b - c;
        if (disc <= 0.0) continue;  // cannot happen for interior points
        double root = std::sqrt(disc);
        double t1 = -b + root, t2 = -b - root;
        auto arc_of = [&](double t) {
          double ang = std::atan2(y + t * dy, x + t * dx);
          if (ang < 0.0) ang += two_pi;
          int a = static_cast<int>(ang / two_pi * arcs);
          return std::min(a, arcs - 1);
        };
        int a1 = arc_of(t1), a2 = arc_of(t2);
        if (a1 == a2) continue;  // single-cell hit: not registered
        int lo = std::min(a1, a2), hi = std::max(a1, a2);
        int bin = lo * arcs - lo * (lo + 1) / 2 + (hi - lo - 1);
        ++hits[bin];
      }
      for (int b = 0; b < nbin; ++b)
        P(b, j) = static_cast<double>(hits[b]) / static_cast<double>(rays_per_pixel);
    }
  return P;
}

PolytopeSpec pet_density_class(int side, double laplacian_bound, double mean_bound,
                               double floor) {
  const int n = side * side;
  PolytopeSpec S;
  S.dim = n;
  S.lower = Vec::Constant(n, floor);
  S.upper = Vec::Constant(n, n * mean_bound);  // implied by the mean constraint
  S.add_ineq(Vec::Ones(n) / static_cast<double>(n), mean_bound);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      Vec a = Vec::Zero(n);
      a[r * side + c] = 4.0;
      if (r > 0) a[(r - 1) * side + c] -= 1.0;
      if (r < side - 1) a[(r + 1) * side + c] -= 1.0;
      if (c > 0) a[r * side + c - 1] -= 1.0;
      if (c < side - 1) a[r * side + c + 1] -= 1.0;
      // 1/4 |4 l_j - neighbors| <= L (out-of-field neighbors are zero)
      S.add_ineq(Vec(a / 4.0), laplacian_bound);
      S.add_ineq(Vec(-a / 4.0), laplacian_bound);
    }
  return S;
}

Vec pet_spot_functional(int side, int corner_row, int corner_col, int spot) {
  if (corner_row < 1 || corner_col < 1 || corner_row + spot - 1 > side ||
      corner_col + spot - 1 > side)
    throw std::invalid_argument("pet_spot_functional: spot outside the field");
  Vec g = Vec::Zero(side * side);
  for (int r = corner_row - 1; r < corner_row - 1 + spot; ++r)
    for (int c = corner_col - 1; c < corner_col - 1 + spot; ++c)
      g[r * side + c] = 1.0 / static_cast<double>(spot * spot);
  return g;
}

PetPlan pet_plan(const Mat& P, const PolytopeSpec& density_class, const Vec& g,
                 double alpha, double rho, double eps, const FWConfig& cfg) {
  if (!(rho > 0.0)) throw std::invalid_argument("pet_plan: rho must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("pet_plan: eps outside (0,1)");
  if (g.size() != P.cols()) throw std::invalid_argument("pet_plan: functional size mismatch");
  if ((P * g).cwiseAbs().maxCoeff() <= 0.0)
    throw std::invalid_argument("pet_plan: g lies in the kernel of P");

  PairProblem prob;
  prob.scheme.factors = {SchemeFactor::poisson(static_cast<int>(P.rows()))};
  prob.X.poly = density_class;
  prob.X.poly.add_ineq(g, alpha);
  prob.X.map = P;
  prob.Y.poly = density_class;
  prob.Y.poly.add_ineq(Vec(-g), -(alpha + rho));
  prob.Y.map = P;
  // Poisson tag margins do not apply to the intensity image (entries of
  // P lambda may be legitimately tiny); detector logs are floored instead.
  prob.tags.assign(prob.scheme.expanded().factors.size(), DomainTag::unrestricted());

  PairSolution inner = solve_pair(prob, cfg);
  // opt = -sum (sqrt - sqrt)^2 at unit time, so H = -opt.
  double H = -inner.opt;
  if (H <= 1e-12) throw IndistinguishableError("pet_plan: hypotheses are indistinguishable (H = 0)");

  PetPlan plan;
  plan.h = H;
  plan.t_star = 2.0 * std::log(1.0 / eps) / H;
  plan.inner = inner;
  plan.lambda1 = inner.x_raw;  // densities; ambient x_star is the image P lambda
  plan.lambda2 = inner.y_raw;
  // detector at t*: Poisson detector built at mu = t* P lambda
  ProductScheme sch;
  sch.factors = {SchemeFactor::poisson(static_cast<int>(P.rows()))};
  plan.detector = build_product_detector(sch.expanded(), Vec(plan.t_star * inner.x_star),
                                         Vec(plan.t_star * inner.y_star));
  return plan;
}

}  // namespace convtest
