#include <doctest.h>

#include <cmath>

#include "convtest/normal.hpp"
#include "convtest/pairtest.hpp"
#include "convtest/rng.hpp"

using namespace convtest;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

PairProblem gaussian_boxes() {
  PairProblem p;
  p.scheme.factors = {SchemeFactor::gaussian(Mat::Identity(2, 2))};
  p.X.poly = PolytopeSpec::box(vec2(1, 0), vec2(2, 0));
  p.Y.poly = PolytopeSpec::box(vec2(-2, 0), vec2(-1, 0));
  return p;
}

}  // namespace

TEST_CASE("gaussian box pair has the closed-form solution") {
  PairSolution s = solve_pair(gaussian_boxes());
  CHECK(s.converged);
  CHECK(s.eps_star == doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
  CHECK(s.x_star[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.y_star[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(s.detector.parts[0].xi[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.detector.parts[0].alpha == doctest::Approx(0.0).epsilon(1e-6));
  // certified risk with delta ~ 0 is Erf(1)
  CHECK(s.certified_eps == doctest::Approx(0.158655).epsilon(1e-4));
}

TEST_CASE("discrete pair matches the grid-search oracle") {
  PairProblem p;
  p.scheme.factors = {SchemeFactor::discrete(2)};
  p.X.poly = PolytopeSpec::simplex(2);
  p.X.poly.add_ineq(vec2(1, 0), 0.4);
  p.Y.poly = PolytopeSpec::simplex(2);
  p.Y.poly.add_ineq(vec2(-1, 0), -0.6);
  FWConfig cfg;
  cfg.gap_tol = 1e-9;
  PairSolution s = solve_pair(p, cfg);
  CHECK(s.eps_star == doctest::Approx(0.979796).epsilon(2e-6));
  // delta ~ 0 so the certified risk collapses to eps_star + delta
  CHECK(s.certified_eps == doctest::Approx(s.eps_star).epsilon(1e-6));
}

TEST_CASE("poisson singletons reduce to the hellinger exponent") {
  PairProblem p;
  p.scheme.factors = {SchemeFactor::poisson(2)};
  p.X.poly = PolytopeSpec::singleton(vec2(1, 4));
  p.Y.poly = PolytopeSpec::singleton(vec2(4, 1));
  PairSolution s = solve_pair(p);
  CHECK(s.eps_star == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
  CHECK(s.scheme.factors.size() == 2);  // expanded to scalars
}

TEST_CASE("overlapping sets come back flagged, not as errors") {
  PairProblem p;
  p.scheme.factors = {SchemeFactor::gaussian(Mat::Identity(2, 2))};
  p.X.poly = PolytopeSpec::box(vec2(-1, -1), vec2(1, 1));
  p.Y.poly = PolytopeSpec::box(vec2(0, 0), vec2(2, 2));
  PairSolution s = solve_pair(p);
  CHECK(s.trivial_overlap);
  CHECK(s.eps_star == doctest::Approx(1.0).epsilon(1e-6));
  double coef = 0.0;
  for (const auto& part : s.detector.parts) coef += part.xi.cwiseAbs().sum();
  CHECK(coef <= 1e-3);
}

TEST_CASE("empty sets raise EmptySetError") {
  PairProblem p = gaussian_boxes();
  p.X.poly.add_ineq(vec2(1, 0), 0.0);  // x1 <= 0 contradicts box lower 1
  CHECK_THROWS_AS((void)solve_pair(p), EmptySetError);
}

TEST_CASE("shift_detector scales the per-side bounds") {
  PairSolution s = solve_pair(gaussian_boxes());
  PairSolution sh = shift_detector(s, std::log(2.0));
  CHECK(sh.risk_x_bound == doctest::Approx(2.0 * s.eps_star).epsilon(1e-12));
  CHECK(sh.risk_y_bound == doctest::Approx(0.5 * s.eps_star).epsilon(1e-12));
  PairSolution sh2 = shift_detector(s, -std::log(s.eps_star));
  CHECK(sh2.risk_x_bound == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sh2.risk_y_bound == doctest::Approx(s.eps_star * s.eps_star).epsilon(1e-12));
  // shift moves the evaluation
  Vec obs = vec2(0.3, 0.0);
  CHECK(sh.detector.eval(obs) ==
        doctest::Approx(s.detector.eval(obs) - std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("decide applies the sign rule with ties to H_X") {
  PairSolution s = solve_pair(gaussian_boxes());
  CHECK(decide(s, vec2(0.3, 0.0)) == PairVerdict::AcceptX);
  CHECK(decide(s, vec2(0.0, 0.0)) == PairVerdict::AcceptX);  // phi = 0
  CHECK(decide(s, vec2(-0.3, 0.0)) == PairVerdict::AcceptY);
}

TEST_CASE("repeated observation plans") {
  CHECK(repeated_plan(0.6065, 0.01).value() == 10);
  CHECK(repeated_plan(0.5, 0.5).value() == 1);
  CHECK_FALSE(repeated_plan(1.0, 0.01).has_value());
  CHECK(near_opt_sample_size(0.01, 10) == 29);
  CHECK_THROWS_AS((void)near_opt_sample_size(0.3, 10), std::domain_error);
}

TEST_CASE("certified risk formulas") {
  PairSolution s;
  s.scheme.factors = {SchemeFactor::poisson(1)};
  s.opt = -2.0;  // h^2 = 1
  s.eps_star = std::exp(-1.0);
  s.gap = 0.02;
  CHECK(certified_risk(s) == doctest::Approx(std::exp(-0.98)).epsilon(1e-12));
  CHECK(std::exp(-0.98) == doctest::Approx(0.375311).epsilon(1e-5));
}

TEST_CASE("gaussian closed form on random box pairs") {
  // |eps*_solver - exp(-1/8 d^2)| <= 1e-6 relative, d the Sigma^{-1/2}
  // distance between the boxes (axis-separated so the closest points are
  // coordinatewise projections).
  Philox rng(31, 4);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 1 + static_cast<int>(rng.next_u64() % 4);
    Vec lox(n), upx(n), loy(n), upy(n);
    Vec diag(n);
    for (int i = 0; i < n; ++i) {
      double w1 = rng.next_double(), w2 = rng.next_double();
      lox[i] = 0.5 + rng.next_double();
      upx[i] = lox[i] + w1;
      upy[i] = -0.5 - rng.next_double();
      loy[i] = upy[i] - w2;
      diag[i] = 0.5 + 2.0 * rng.next_double();
    }
    PairProblem p;
    p.scheme.factors = {SchemeFactor::gaussian(Mat(diag.asDiagonal()))};
    p.X.poly = PolytopeSpec::box(lox, upx);
    p.Y.poly = PolytopeSpec::box(loy, upy);
    FWConfig cfg;
    cfg.gap_tol = 1e-10;
    PairSolution s = solve_pair(p, cfg);
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double gap = lox[i] - upy[i];
      d2 += gap * gap / diag[i];
    }
    double expected = std::exp(-d2 / 8.0);
    CHECK(std::fabs(s.eps_star - expected) / expected <= 1e-6);
  }
}

TEST_CASE("product separability and repeat multiplicativity") {
  // Two discrete factors solved jointly equal the product of the per-factor
  // solutions; repeat = 2 equals an explicit two-factor product solve.
  PolytopeSpec X1 = PolytopeSpec::simplex(2);
  X1.add_ineq(vec2(1, 0), 0.4);
  PolytopeSpec Y1 = PolytopeSpec::simplex(2);
  Y1.add_ineq(vec2(-1, 0), -0.6);

  FWConfig cfg;
  cfg.gap_tol = 1e-11;

  PairProblem single;
  single.scheme.factors = {SchemeFactor::discrete(2)};
  single.X.poly = X1;
  single.Y.poly = Y1;
  PairSolution s1 = solve_pair(single, cfg);

  // joint: X = X1 x X1 over 4 coordinates
  PairProblem joint;
  joint.scheme.factors = {SchemeFactor::discrete(2), SchemeFactor::discrete(2)};
  PolytopeSpec XX;
  XX.dim = 4;
  XX.lower = Vec::Zero(4);
  XX.upper = Vec::Ones(4);
  Vec e1 = Vec::Zero(4), e3 = Vec::Zero(4), s12 = Vec::Zero(4), s34 = Vec::Zero(4);
  e1[0] = 1;
  e3[2] = 1;
  s12[0] = s12[1] = 1;
  s34[2] = s34[3] = 1;
  XX.eq = {{s12, 1.0}, {s34, 1.0}};
  XX.ineq = {{e1, 0.4}, {e3, 0.4}};
  PolytopeSpec YY = XX;
  YY.ineq = {{Vec(-e1), -0.6}, {Vec(-e3), -0.6}};
  joint.X.poly = XX;
  joint.Y.poly = YY;
  PairSolution s2 = solve_pair(joint, cfg);
  CHECK(s2.eps_star == doctest::Approx(s1.eps_star * s1.eps_star).epsilon(1e-8));

  // repeat = 2 on a single factor
  PairProblem rep = single;
  rep.scheme.factors[0].repeat = 2;
  PairSolution s3 = solve_pair(rep, cfg);
  CHECK(s3.eps_star == doctest::Approx(s1.eps_star * s1.eps_star).epsilon(1e-8));
  CHECK(s3.opt == doctest::Approx(2.0 * s1.opt).epsilon(1e-8));
}

TEST_CASE("swap symmetry negates the detector") {
  PairProblem p;
  p.scheme.factors = {SchemeFactor::discrete(3)};
  PolytopeSpec X = PolytopeSpec::simplex(3);
  Vec a(3);
  a << 1.0, -0.5, 0.0;
  X.add_ineq(a, 0.1);
  PolytopeSpec Y = PolytopeSpec::simplex(3);
  Y.add_ineq(Vec(-a), -0.4);
  p.X.poly = X;
  p.Y.poly = Y;
  FWConfig cfg;
  cfg.gap_tol = 1e-11;
  PairSolution s = solve_pair(p, cfg);
  PairProblem q = p;
  std::swap(q.X, q.Y);
  PairSolution t = solve_pair(q, cfg);
  CHECK(s.eps_star == doctest::Approx(t.eps_star).epsilon(1e-8));
  for (int w = 0; w < 3; ++w)
    CHECK(s.detector.parts[0].xi[w] ==
          doctest::Approx(-t.detector.parts[0].xi[w]).epsilon(1e-4));
}

TEST_CASE("monte-carlo balance of the delivered detector") {
  // E_{x*}[e^{-phi}] and E_{y*}[e^{phi}] both estimate eps_star.
  PairProblem p;
  p.scheme.factors = {SchemeFactor::discrete(4)};
  PolytopeSpec X = PolytopeSpec::simplex(4);
  Vec a(4);
  a << 1.0, 1.0, 0.0, 0.0;
  X.add_ineq(a, 0.35);
  PolytopeSpec Y = PolytopeSpec::simplex(4);
  Y.add_ineq(Vec(-a), -0.65);
  p.X.poly = X;
  p.Y.poly = Y;
  PairSolution s = solve_pair(p);

  Philox rng(64, 11);
  const int N = 40000;
  double sx = 0.0, sx2 = 0.0, sy = 0.0, sy2 = 0.0;
  for (int i = 0; i < N; ++i) {
    Vec ox = sample_obs(s.scheme, s.x_star, rng);
    double vx = std::exp(-s.detector.eval(ox));
    sx += vx;
    sx2 += vx * vx;
    Vec oy = sample_obs(s.scheme, s.y_star, rng);
    double vy = std::exp(s.detector.eval(oy));
    sy += vy;
    sy2 += vy * vy;
  }
  double mx = sx / N, my = sy / N;
  double sex = std::sqrt((sx2 / N - mx * mx) / N);
  double sey = std::sqrt((sy2 / N - my * my) / N);
  CHECK(std::fabs(mx - s.eps_star) <= 3.0 * sex);
  CHECK(std::fabs(my - s.eps_star) <= 3.0 * sey);
}
