#include <doctest.h>

#include <cmath>
#include <sstream>

#include "convtest/scheme.hpp"

using namespace convtest;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("psi values match the closed forms") {
  SchemeFactor g = SchemeFactor::gaussian(Mat::Identity(2, 2));
  CHECK(psi_eval(g, vec2(1, 0), vec2(-1, 0)).value == doctest::Approx(-1.0).epsilon(1e-12));

  SchemeFactor p = SchemeFactor::poisson(1);
  Vec mu(1), nu(1);
  mu << 1.0;
  nu << 4.0;
  CHECK(psi_eval(p, mu, nu).value == doctest::Approx(-1.0).epsilon(1e-12));

  SchemeFactor d = SchemeFactor::discrete(2);
  double v = psi_eval(d, vec2(0.5, 0.5), vec2(0.9, 0.1)).value;
  CHECK(v == doctest::Approx(2.0 * std::log(0.894427)).epsilon(1e-6));
  // sqrt(0.45) + sqrt(0.05) by hand
  CHECK(std::exp(v / 2.0) ==
        doctest::Approx(std::sqrt(0.45) + std::sqrt(0.05)).epsilon(1e-12));
}

TEST_CASE("psi symmetry and zero diagonal") {
  Philox rng(42, 0);
  Mat sigma(2, 2);
  sigma << 2.0, 0.3, 0.3, 1.0;
  std::vector<SchemeFactor> factors = {SchemeFactor::gaussian(sigma),
                                       SchemeFactor::poisson(2),
                                       SchemeFactor::discrete(2)};
  for (const auto& f : factors) {
    for (int t = 0; t < 20; ++t) {
      Vec x(f.dim), y(f.dim);
      for (int i = 0; i < f.dim; ++i) {
        x[i] = 0.1 + rng.next_double();
        y[i] = 0.1 + rng.next_double();
      }
      if (f.kind == FactorKind::Discrete) {
        x /= x.sum();
        y /= y.sum();
      }
      CHECK(psi_eval(f, x, x).value == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(psi_eval(f, x, y).value == doctest::Approx(psi_eval(f, y, x).value).epsilon(1e-12));
      CHECK(psi_eval(f, x, y).value <= 1e-12);
    }
  }
}

TEST_CASE("psi gradients agree with central differences") {
  Philox rng(99, 1);
  Mat sigma(2, 2);
  sigma << 1.5, -0.2, -0.2, 0.8;
  std::vector<SchemeFactor> factors = {SchemeFactor::gaussian(sigma),
                                       SchemeFactor::poisson(3),
                                       SchemeFactor::discrete(3)};
  const double h = 1e-6;
  for (const auto& f : factors) {
    for (int t = 0; t < 10; ++t) {
      Vec x(f.dim), y(f.dim);
      for (int i = 0; i < f.dim; ++i) {
        x[i] = 0.2 + rng.next_double();
        y[i] = 0.2 + rng.next_double();
      }
      PsiValue pv = psi_eval(f, x, y);
      for (int i = 0; i < f.dim; ++i) {
        Vec xp = x, xm = x, yp = y, ym = y;
        xp[i] += h;
        xm[i] -= h;
        yp[i] += h;
        ym[i] -= h;
        double gx = (psi_eval(f, xp, y, false).value - psi_eval(f, xm, y, false).value) / (2 * h);
        double gy = (psi_eval(f, x, yp, false).value - psi_eval(f, x, ym, false).value) / (2 * h);
        CHECK(pv.grad_x[i] == doctest::Approx(gx).epsilon(1e-5));
        CHECK(pv.grad_y[i] == doctest::Approx(gy).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("detector construction formulas") {
  SchemeFactor g = SchemeFactor::gaussian(Mat::Identity(2, 2));
  DetectorPart dg = build_detector(g, vec2(1, 0), vec2(-1, 0));
  CHECK(dg.xi[0] == doctest::Approx(1.0));
  CHECK(dg.xi[1] == doctest::Approx(0.0));
  CHECK(dg.alpha == doctest::Approx(0.0));

  SchemeFactor d = SchemeFactor::discrete(2);
  DetectorPart dd = build_detector(d, vec2(0.5, 0.5), vec2(0.9, 0.1));
  CHECK(dd.xi[0] == doctest::Approx(0.5 * std::log(5.0 / 9.0)).epsilon(1e-12));
  CHECK(dd.xi[1] == doctest::Approx(0.5 * std::log(5.0)).epsilon(1e-12));

  SchemeFactor p = SchemeFactor::poisson(1);
  Vec mu(1), nu(1);
  mu << 1.0;
  nu << 4.0;
  DetectorPart dp = build_detector(p, mu, nu);
  CHECK(dp.xi[0] == doctest::Approx(0.5 * std::log(0.25)).epsilon(1e-12));
  CHECK(dp.alpha == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("detector evaluation and shifts") {
  Detector det;
  DetectorPart part;
  part.kind = FactorKind::Gaussian;
  part.dim = 2;
  part.repeat = 1;
  part.xi = vec2(1.0, 0.0);
  part.alpha = 0.0;
  det.parts.push_back(part);
  CHECK(det.eval(vec2(0.7, 5.0)) == doctest::Approx(0.7));

  Detector tab;
  DetectorPart dp;
  dp.kind = FactorKind::Discrete;
  dp.dim = 2;
  dp.repeat = 3;
  dp.xi = vec2(0.4, -0.3);
  tab.parts.push_back(dp);
  Vec obs(3);
  obs << 2, 2, 2;
  CHECK(tab.eval(obs) == doctest::Approx(-0.9).epsilon(1e-12));

  tab.shift = tab.eval(obs);
  CHECK(tab.eval(obs) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("discrete balance identity holds in closed form") {
  // sum_w e^{-phi} x_w = sum_w e^{phi} y_w = sum_w sqrt(x_w y_w) to 1e-12.
  Philox rng(7, 7);
  for (int t = 0; t < 25; ++t) {
    int m = 2 + static_cast<int>(rng.next_u64() % 5);
    Vec x(m), y(m);
    for (int i = 0; i < m; ++i) {
      x[i] = 0.05 + rng.next_double();
      y[i] = 0.05 + rng.next_double();
    }
    x /= x.sum();
    y /= y.sum();
    DetectorPart part = build_detector(SchemeFactor::discrete(m), x, y);
    double lhs = 0.0, rhs = 0.0, aff = 0.0;
    for (int w = 0; w < m; ++w) {
      lhs += std::exp(-part.xi[w]) * x[w];
      rhs += std::exp(part.xi[w]) * y[w];
      aff += std::sqrt(x[w] * y[w]);
    }
    CHECK(std::fabs(lhs - aff) <= 1e-12);
    CHECK(std::fabs(rhs - aff) <= 1e-12);
  }
}

TEST_CASE("sampling determinism and degenerate categories") {
  ProductScheme sch;
  sch.factors = {SchemeFactor::discrete(3)};
  Vec mu(3);
  mu << 1.0, 0.0, 0.0;
  Philox rng(1, 2);
  for (int t = 0; t < 50; ++t) CHECK(sample_obs(sch, mu, rng)[0] == doctest::Approx(1.0));

  ProductScheme gsch;
  gsch.factors = {SchemeFactor::gaussian(Mat::Identity(2, 2), 2)};
  Vec gmu = vec2(0.5, -0.5);
  Philox r1(123, 9), r2(123, 9);
  for (int t = 0; t < 10; ++t) {
    Vec a = sample_obs(gsch, gmu, r1);
    Vec b = sample_obs(gsch, gmu, r2);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // bit-identical
  }
}

TEST_CASE("poisson sampler mean/variance sanity across both regimes") {
  Philox rng(2718, 1);
  for (double mu : {0.5, 4.0, 40.0, 400.0}) {
    const int N = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < N; ++i) {
      double k = static_cast<double>(rng.next_poisson(mu));
      sum += k;
      sum2 += k * k;
    }
    double mean = sum / N;
    double var = sum2 / N - mean * mean;
    CHECK(mean == doctest::Approx(mu).epsilon(0.05));
    CHECK(var == doctest::Approx(mu).epsilon(0.12));
  }
}

TEST_CASE("observation files round-trip") {
  ProductScheme sch;
  sch.factors = {SchemeFactor::gaussian(Mat::Identity(2, 2)), SchemeFactor::poisson(1, 2),
                 SchemeFactor::discrete(3)};
  Philox rng(5, 77);
  Vec mufull(6);
  mufull << 0.3, -1.2, 2.5, 0.3, 0.2, 0.5;  // discrete probs sum to 1
  std::vector<Vec> obs;
  ProductScheme exp = sch.expanded();
  for (int i = 0; i < 8; ++i) obs.push_back(sample_obs(exp, mufull, rng));
  std::stringstream ss;
  write_obs_file(ss, exp, obs);
  std::vector<Vec> back = read_obs_file(ss, exp);
  REQUIRE(back.size() == obs.size());
  for (size_t i = 0; i < obs.size(); ++i)
    CHECK((back[i] - obs[i]).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("shape mismatches are rejected") {
  ProductScheme sch;
  sch.factors = {SchemeFactor::discrete(3)};
  Vec bad(1);
  bad << 4;  // outside 1..3
  CHECK_THROWS_AS(validate_obs(sch, bad), std::invalid_argument);
  Vec frac(1);
  frac << 1.5;
  CHECK_THROWS_AS(validate_obs(sch, frac), std::invalid_argument);
  CHECK_THROWS_AS(validate_obs(sch, Vec::Ones(2)), std::invalid_argument);
}
