#include <doctest.h>

#include <cmath>

#include "convtest/frank_wolfe.hpp"
#include "convtest/normal.hpp"
#include "convtest/rng.hpp"
#include "convtest/solver_kernels.hpp"

using namespace convtest;

TEST_CASE("gaussian tail values and inverse") {
  CHECK(gaussian_tail(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gaussian_tail_inv(0.025) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(gaussian_tail_inv(0.0125) == doctest::Approx(2.241403).epsilon(1e-6));
  // Round-trip to 1e-12 and monotonicity.
  for (double s : {1e-8, 1e-4, 0.0125, 0.025, 0.3, 0.5, 0.77, 0.999}) {
    CHECK(std::fabs(gaussian_tail(gaussian_tail_inv(s)) - s) <= 1e-12);
  }
  CHECK(gaussian_tail(1.0) < gaussian_tail(0.5));
  CHECK_THROWS_AS((void)gaussian_tail_inv(0.0), std::domain_error);
  CHECK_THROWS_AS((void)gaussian_tail_inv(1.0), std::domain_error);
}

TEST_CASE("expm basics") {
  CHECK((expm(Mat::Zero(3, 3)) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);

  Mat L(2, 2);
  L << -1.0, 1.0, 1.0, -1.0;
  Mat S = expm(L);
  double e2 = std::exp(-2.0);
  CHECK(S(0, 0) == doctest::Approx(0.5 * (1 + e2)).epsilon(1e-12));
  CHECK(S(1, 0) == doctest::Approx(0.5 * (1 - e2)).epsilon(1e-12));
  CHECK(S(0, 1) == doctest::Approx(0.5 * (1 - e2)).epsilon(1e-12));

  // expm(L) expm(-L) = I; stochastic columns for rate matrices.
  Philox rng(11, 3);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 3 + static_cast<int>(rng.next_u64() % 5);
    Mat R = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i)
        if (i != j) R(i, j) = 3.0 * rng.next_double();
      R(j, j) = -(R.col(j).sum() - R(j, j));
    }
    Mat E = expm(R);
    Mat Einv = expm(Mat(-R));
    CHECK((E * Einv - Mat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-8);
    for (int j = 0; j < n; ++j) CHECK(std::fabs(E.col(j).sum() - 1.0) <= 1e-10);
  }
}

TEST_CASE("spectral norm of nonnegative matrices") {
  Mat E(2, 2);
  E << 0.1, 0.2, 0.2, 0.4;  // rank one
  SingularTriple t = spectral_norm_nonneg(E);
  CHECK(t.sigma == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(t.g[1] / t.g[0] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(t.h[1] / t.h[0] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK((E * t.h - t.sigma * t.g).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((E.transpose() * t.g - t.sigma * t.h).cwiseAbs().maxCoeff() <= 1e-8);

  Mat one(1, 1);
  one << 0.37;
  CHECK(spectral_norm_nonneg(one).sigma == doctest::Approx(0.37).epsilon(1e-12));

  CHECK(spectral_norm_nonneg(Mat::Identity(2, 2)).sigma == doctest::Approx(1.0).epsilon(1e-10));

  CHECK_THROWS(spectral_norm_nonneg(Mat::Zero(2, 3)));

  // ||E|| <= max(max row sum, max col sum) on random nonnegative matrices.
  Philox rng(7, 1);
  for (int trial = 0; trial < 30; ++trial) {
    int m = 1 + static_cast<int>(rng.next_u64() % 6);
    int n = 1 + static_cast<int>(rng.next_u64() % 6);
    Mat A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.next_double();
    double rowmax = A.rowwise().sum().maxCoeff();
    double colmax = A.colwise().sum().maxCoeff();
    CHECK(spectral_norm_nonneg(A).sigma <= std::max(rowmax, colmax) + 1e-9);
  }
}

TEST_CASE("perron pair on positive off-diagonal matrices") {
  Mat E(2, 2);
  E << 0.0, 0.3, 0.3, 0.0;
  PerronPair p = perron_positive(E);
  CHECK(p.rho == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(p.g[0] == doctest::Approx(p.g[1]).epsilon(1e-8));

  Mat F(2, 2);
  F << 0.0, 0.3, 1.2, 0.0;
  p = perron_positive(F);
  CHECK(p.rho == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(p.g[1] / p.g[0] == doctest::Approx(2.0).epsilon(1e-8));

  double rho0 = 0.17;
  Mat J = rho0 * (Mat::Ones(3, 3) - Mat::Identity(3, 3));
  p = perron_positive(J);
  CHECK(p.rho == doctest::Approx(2.0 * rho0).epsilon(1e-10));
  CHECK((p.g.array() / p.g[0]).maxCoeff() == doctest::Approx(1.0).epsilon(1e-8));

  // Equalization identity: with alpha_ij = ln g_j - ln g_i every weighted row
  // sum equals rho.
  Philox rng(3, 9);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 2 + static_cast<int>(rng.next_u64() % 8);
    Mat A = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) A(i, j) = 0.05 + rng.next_double();
    PerronPair q = perron_positive(A);
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) row += A(i, j) * q.g[j] / q.g[i];
      CHECK(row == doctest::Approx(q.rho).epsilon(1e-8));
    }
  }
}

TEST_CASE("bisection on monotone predicates") {
  auto f1 = [](double r) { return r <= 0.3; };
  double r = bisect_max_param(f1, 0.0, 1.0, 1e-6);
  CHECK(r == doctest::Approx(0.3).epsilon(1e-5));
  CHECK(f1(r));

  auto f2 = [](double) { return true; };
  CHECK(bisect_max_param(f2, 0.0, 0.8, 1e-6) == doctest::Approx(0.8));

  auto f3 = [](double) { return false; };
  CHECK_THROWS_AS((void)bisect_max_param(f3, 0.0, 1.0, 1e-6), std::runtime_error);
}

TEST_CASE("frank-wolfe projects onto a degenerate box") {
  Vec lo(2), up(2);
  lo << 1.0, 0.0;
  up << 2.0, 0.0;
  PolytopeSpec S = PolytopeSpec::box(lo, up);
  Objective f = [](const Vec& x, Vec* g) {
    Vec target(2);
    target << 3.0, 0.0;
    if (g) *g = -2.0 * (x - target);
    return -(x - target).squaredNorm();
  };
  OptResult r = maximize_concave(f, S, {});
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(r.point[0] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(r.gap <= 1e-7);
}

TEST_CASE("frank-wolfe on a two-factor product finds closest points") {
  Vec lo1(2), up1(2), lo2(2), up2(2);
  lo1 << 1.0, 0.0;
  up1 << 2.0, 0.0;
  lo2 << -2.0, 0.0;
  up2 << -1.0, 0.0;
  PolytopeSpec X = PolytopeSpec::box(lo1, up1);
  PolytopeSpec Y = PolytopeSpec::box(lo2, up2);
  Objective f = [](const Vec& z, Vec* g) {
    Vec x = z.head(2), y = z.tail(2);
    Vec d = x - y;
    if (g) {
      g->resize(4);
      g->head(2) = -0.5 * d;
      g->tail(2) = 0.5 * d;
    }
    return -0.25 * d.squaredNorm();
  };
  OptResult r = maximize_concave(f, {&X, &Y}, {});
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(r.point[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.point[2] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("frank-wolfe reproduces the grid-search hellinger optimum") {
  // f(x,y) = 2 ln(sqrt(x1 y1) + sqrt(x2 y2)) over cut 2-simplices.
  PolytopeSpec X = PolytopeSpec::simplex(2);
  {
    Vec a(2);
    a << 1.0, 0.0;
    X.add_ineq(a, 0.4);
  }
  PolytopeSpec Y = PolytopeSpec::simplex(2);
  {
    Vec a(2);
    a << -1.0, 0.0;
    Y.add_ineq(a, -0.6);
  }
  Objective f = [](const Vec& z, Vec* g) {
    double x1 = z[0], x2 = z[1], y1 = z[2], y2 = z[3];
    double rho = std::sqrt(x1 * y1) + std::sqrt(x2 * y2);
    if (g) {
      g->resize(4);
      (*g)[0] = std::sqrt(y1 / x1) / rho;
      (*g)[1] = std::sqrt(y2 / x2) / rho;
      (*g)[2] = std::sqrt(x1 / y1) / rho;
      (*g)[3] = std::sqrt(x2 / y2) / rho;
    }
    return 2.0 * std::log(rho);
  };
  // Independent oracle: exhaustive grid search at step 1e-3 over both
  // 1-parameter sets.
  double best = -1e300;
  for (int i = 0; i <= 400; ++i) {
    double x1 = i * 1e-3;
    for (int j = 600; j <= 1000; ++j) {
      double y1 = j * 1e-3;
      double rho = std::sqrt(x1 * y1) + std::sqrt((1 - x1) * (1 - y1));
      best = std::max(best, 2.0 * std::log(rho));
    }
  }
  CHECK(std::exp(best / 2.0) == doctest::Approx(0.979796).epsilon(1e-5));

  FWConfig cfg;
  cfg.gap_tol = 1e-9;
  OptResult r = maximize_concave(f, {&X, &Y}, cfg);
  CHECK(r.value == doctest::Approx(best).epsilon(1e-6));
  CHECK(r.value >= best - 1e-9);  // grid value cannot beat the true optimum
}

TEST_CASE("frank-wolfe reports nonfinite objectives") {
  PolytopeSpec S = PolytopeSpec::box(Vec::Zero(1), Vec::Ones(1));
  Objective f = [](const Vec& x, Vec* g) {
    if (g) (*g)[0] = 1.0 / x[0];
    return std::log(x[0]);
  };
  CHECK_THROWS_AS((void)maximize_concave(f, S, {}), NonfiniteObjectiveError);
}

TEST_CASE("frank-wolfe gap bounds the suboptimality on a known instance") {
  // Quadratic with known optimum on the box [0,1]^3: f = -|x - c|^2.
  Vec c(3);
  c << 0.25, 0.5, 0.9;
  PolytopeSpec S = PolytopeSpec::box(Vec::Zero(3), Vec::Ones(3));
  Objective f = [&](const Vec& x, Vec* g) {
    if (g) *g = -2.0 * (x - c);
    return -(x - c).squaredNorm();
  };
  FWConfig cfg;
  cfg.max_iters = 60;  // force a nonconverged run
  cfg.gap_tol = 1e-12;
  OptResult r = maximize_concave(f, S, cfg);
  CHECK(0.0 - r.value <= r.gap + 1e-12);  // f* = 0 here
}
