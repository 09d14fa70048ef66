#include <doctest.h>

#include <cmath>

#include "convtest/multitest.hpp"
#include "convtest/rng.hpp"

using namespace convtest;

TEST_CASE("union_assemble on the rank-one matrix") {
  Mat E(2, 2);
  E << 0.1, 0.2, 0.2, 0.4;
  UnionTest u = union_assemble(E);
  CHECK(u.eps == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(u.shifts(0, 0) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(u.shifts(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-7));
  CHECK(u.shifts(1, 0) == doctest::Approx(-std::log(2.0)).epsilon(1e-7));
  CHECK(u.shifts(1, 1) == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("union_assemble degenerate 1x1") {
  Mat E(1, 1);
  E << 0.37;
  UnionTest u = union_assemble(E);
  CHECK(u.eps == doctest::Approx(0.37));
  CHECK(u.shifts(0, 0) == doctest::Approx(0.0).epsilon(1e-10));
  Mat phi(1, 1);
  phi << 1.23;
  CHECK(u.aggregate(phi, AggregationMode::MaxMin) == doctest::Approx(1.23));
}

TEST_CASE("union_assemble rejects nonpositive risks") {
  Mat E(2, 2);
  E << 0.1, 0.0, 0.2, 0.4;
  CHECK_THROWS_AS((void)union_assemble(E), std::invalid_argument);
}

TEST_CASE("row/column sum bound on a random 5x5 instance") {
  Philox rng(17, 2);
  Mat E(5, 5);
  double r = 0.8;
  // random entries scaled so every row and column sum is <= r
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) E(i, j) = 0.01 + rng.next_double();
  double worst = std::max(E.rowwise().sum().maxCoeff(), E.colwise().sum().maxCoeff());
  E *= r / worst;
  UnionTest u = union_assemble(E);
  CHECK(u.eps <= r + 1e-9);
}

TEST_CASE("aggregation modes are ordered pointwise") {
  Philox rng(8, 8);
  Mat E(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) E(i, j) = 0.05 + 0.5 * rng.next_double();
  UnionTest u = union_assemble(E);
  for (int t = 0; t < 50; ++t) {
    Mat phi(3, 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) phi(i, j) = 4.0 * rng.next_double() - 2.0;
    double lo = u.aggregate(phi, AggregationMode::MaxMin);
    double sad = u.aggregate(phi, AggregationMode::Saddle);
    double hi = u.aggregate(phi, AggregationMode::MinMax);
    CHECK(lo <= sad + 1e-12);
    CHECK(sad <= hi + 1e-12);
  }
}

TEST_CASE("saddle value is exact on a known game") {
  // Matching pennies: value 0 with shifts zero.
  Mat E(2, 2);
  E << 0.5, 0.5, 0.5, 0.5;
  UnionTest u = union_assemble(E);
  Mat phi(2, 2);
  phi << 1.0, -1.0, -1.0, 1.0;
  CHECK(u.aggregate(phi, AggregationMode::MaxMin) == doctest::Approx(-1.0));
  CHECK(u.aggregate(phi, AggregationMode::MinMax) == doctest::Approx(1.0));
  CHECK(u.aggregate(phi, AggregationMode::Saddle) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("weighted_shifts examples") {
  Mat risks(2, 2);
  risks << 0.0, 0.3, 0.3, 0.0;
  ShiftPlan p1 = weighted_shifts(risks, Vec::Ones(2));
  CHECK(p1.eps == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(p1.alpha(0, 1) == doctest::Approx(0.0).epsilon(1e-8));

  Vec imp(2);
  imp << 1.0, 4.0;
  ShiftPlan p2 = weighted_shifts(risks, imp);
  CHECK(p2.eps == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(p2.alpha(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-8));

  double c = 0.21;
  Mat r3 = c * (Mat::Ones(3, 3) - Mat::Identity(3, 3));
  ShiftPlan p3 = weighted_shifts(r3, Vec::Ones(3));
  CHECK(p3.eps == doctest::Approx(2.0 * c).epsilon(1e-10));
  CHECK(p3.alpha.cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("weighted_shifts equalizes rows and is optimal under perturbation") {
  Philox rng(21, 3);
  for (int trial = 0; trial < 20; ++trial) {
    int M = 2 + static_cast<int>(rng.next_u64() % 7);
    Mat risks = Mat::Zero(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = i + 1; j < M; ++j) {
        double e = 0.02 + rng.next_double();
        risks(i, j) = risks(j, i) = e;
      }
    Vec imp(M);
    for (int i = 0; i < M; ++i) imp[i] = 0.2 + 2.0 * rng.next_double();
    ShiftPlan p = weighted_shifts(risks, imp);
    // equalization
    for (int i = 0; i < M; ++i) {
      double row = 0.0;
      for (int j = 0; j < M; ++j)
        if (j != i) row += imp[i] * risks(i, j) * std::exp(p.alpha(i, j));
      CHECK(row == doctest::Approx(p.eps).epsilon(1e-8));
    }
    // random skew-symmetric perturbations never reduce the objective
    for (int t = 0; t < 5; ++t) {
      Mat d = Mat::Zero(M, M);
      for (int i = 0; i < M; ++i)
        for (int j = i + 1; j < M; ++j) {
          d(i, j) = 0.2 * (2.0 * rng.next_double() - 1.0);
          d(j, i) = -d(i, j);
        }
      Mat alpha = p.alpha + d;
      double obj = 0.0;
      for (int i = 0; i < M; ++i) {
        double row = 0.0;
        for (int j = 0; j < M; ++j)
          if (j != i) row += imp[i] * risks(i, j) * std::exp(alpha(i, j));
        obj = std::max(obj, row);
      }
      CHECK(obj >= p.eps - 1e-10);
    }
  }
}

TEST_CASE("closeness_shifts: diagonal relation reduces to weighted_shifts") {
  Mat risks(3, 3);
  risks << 0.0, 0.2, 0.4, 0.2, 0.0, 0.1, 0.4, 0.1, 0.0;
  ShiftPlan a = closeness_shifts(risks, ClosenessRelation::diagonal(3));
  ShiftPlan b = weighted_shifts(risks, Vec::Ones(3));
  CHECK(a.eps == doctest::Approx(b.eps).epsilon(1e-8));
  CHECK((a.alpha - b.alpha).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("closeness_shifts partition closed form matches brute-force SVD") {
  Mat risks(3, 3);
  risks << 0.0, 0.25, 0.4, 0.25, 0.0, 0.15, 0.4, 0.15, 0.0;
  ShiftPlan p =
      closeness_shifts(risks, ClosenessRelation::from_partition({{0, 1}, {2}}, 3));
  Mat D = risks;
  D(0, 1) = D(1, 0) = 0.0;
  // brute-force largest singular value of the small matrix
  Eigen::JacobiSVD<Mat> svd(D);
  CHECK(p.eps == doctest::Approx(svd.singularValues()[0]).epsilon(1e-8));
  CHECK(p.gap <= 1e-9);
}

TEST_CASE("closeness_shifts flags all-close relations") {
  Mat risks(2, 2);
  risks << 0.0, 0.3, 0.3, 0.0;
  ShiftPlan p = closeness_shifts(risks, ClosenessRelation::from_partition({{0, 1}}, 2));
  CHECK(p.all_close);
  CHECK(p.eps == doctest::Approx(0.0));
}

TEST_CASE("closeness_shifts general relation: boundary rows contribute zero") {
  // Margin-style relation: hypothesis 0 is a boundary row (everything close
  // to it), the rest are diagonal-only.
  int M = 4;
  ClosenessRelation C = ClosenessRelation::diagonal(M);
  for (int j = 0; j < M; ++j) C.close[0][j] = true;
  Philox rng(5, 1);
  Mat risks = Mat::Zero(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = i + 1; j < M; ++j) {
      double e = 0.05 + 0.4 * rng.next_double();
      risks(i, j) = risks(j, i) = e;
    }
  ShiftPlan p = closeness_shifts(risks, C);
  // row 0 has an empty sum; make sure the objective accounts only rows 1..3
  double row0 = 0.0;
  for (int j = 0; j < M; ++j)
    if (!C.close[0][j]) row0 += risks(0, j) * std::exp(p.alpha(0, j));
  CHECK(row0 == doctest::Approx(0.0));
  CHECK(p.eps > 0.0);
  // alpha skew-symmetric
  CHECK((p.alpha + p.alpha.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  // the asymmetric relation must beat or match the symmetric-closure bound
  // evaluated at its own optimum
  CHECK(p.gap >= 0.0);
}

TEST_CASE("run_multitest acceptance rules") {
  ClosenessRelation C = ClosenessRelation::diagonal(2);
  Mat alpha = Mat::Zero(2, 2);
  Mat phi(2, 2);
  phi << 0.0, 1.0, -1.0, 0.0;
  auto acc = run_multitest(phi, alpha, C);
  REQUIRE(acc.size() == 1);
  CHECK(acc[0] == 0);

  phi(0, 1) = 0.0;
  phi(1, 0) = 0.0;  // tie: strict positivity required
  CHECK(run_multitest(phi, alpha, C).empty());

  // close pair is co-acceptable
  ClosenessRelation C3 = ClosenessRelation::diagonal(3);
  C3.close[0][1] = C3.close[1][0] = true;
  Mat phi3 = Mat::Zero(3, 3);
  phi3(0, 2) = 1.0;
  phi3(2, 0) = -1.0;
  phi3(1, 2) = 1.0;
  phi3(2, 1) = -1.0;
  auto acc3 = run_multitest(phi3, Mat::Zero(3, 3), C3);
  REQUIRE(acc3.size() == 2);
  CHECK(acc3[0] == 0);
  CHECK(acc3[1] == 1);
}

TEST_CASE("multitest accepted set: diagonal closeness accepts at most one") {
  Philox rng(33, 5);
  ClosenessRelation C = ClosenessRelation::diagonal(5);
  for (int t = 0; t < 100; ++t) {
    Mat phi = Mat::Zero(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) {
        phi(i, j) = 2.0 * rng.next_double() - 1.0;
        phi(j, i) = -phi(i, j);
      }
    CHECK(run_multitest(phi, Mat::Zero(5, 5), C).size() <= 1);
  }
}

TEST_CASE("multiple_unions: singleton blocks match run_multitest; L=2 spectral norm") {
  Mat risks(2, 2);
  risks << 0.0, 0.5, 0.5, 0.0;
  Mat phi(2, 2);
  phi << 0.0, 0.7, -0.7, 0.0;
  MultipleUnionsResult r = multiple_unions({{0}, {1}}, risks, phi);
  CHECK(r.eps == doctest::Approx(0.5).epsilon(1e-8));
  REQUIRE(r.accepted_block.has_value());
  CHECK(*r.accepted_block == 0);

  // rank-one example as two blocks of a 4-hypothesis family
  Mat E4 = Mat::Zero(4, 4);
  Mat E(2, 2);
  E << 0.1, 0.2, 0.2, 0.4;
  // hypotheses 0,1 = "X side", 2,3 = "Y side"; cross risks from E
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      E4(i, 2 + j) = E(i, j);
      E4(2 + j, i) = E(i, j);
    }
  // in-block risks arbitrary positive (they get zeroed by the partition)
  E4(0, 1) = E4(1, 0) = 0.9;
  E4(2, 3) = E4(3, 2) = 0.9;
  MultipleUnionsResult r2 = multiple_unions({{0, 1}, {2, 3}}, E4, Mat::Zero(4, 4));
  CHECK(r2.eps == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("two-stage aggregation is never better than the direct one") {
  Philox rng(44, 6);
  for (int t = 0; t < 10; ++t) {
    Mat D = Mat::Zero(4, 4);
    std::vector<std::vector<int>> blocks = {{0, 1}, {2, 3}};
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        double e = 0.05 + 0.5 * rng.next_double();
        D(i, j) = D(j, i) = e;
      }
    Mat Dz = D;
    Dz(0, 1) = Dz(1, 0) = Dz(2, 3) = Dz(3, 2) = 0.0;
    Eigen::JacobiSVD<Mat> svd(Dz);
    double direct = svd.singularValues()[0];
    // two-stage: G, gamma_{ll'} = ||D^{ll'}||
    Mat blockD(2, 2);
    blockD.setZero();
    Mat cross = Dz.block(0, 2, 2, 2);
    Eigen::JacobiSVD<Mat> svd2(cross);
    blockD(0, 1) = blockD(1, 0) = svd2.singularValues()[0];
    Eigen::JacobiSVD<Mat> svd3(blockD);
    double twostage = svd3.singularValues()[0];
    CHECK(direct <= twostage + 1e-10);
  }
}

TEST_CASE("multi_sample_bound formulas") {
  CHECK(multi_sample_bound(0.01, 5, 10) == 39);
  CHECK(multi_sample_bound(0.01, 1, 10) == 29);
  CHECK_THROWS_AS((void)multi_sample_bound(0.3, 5, 10), std::domain_error);
}

TEST_CASE("antisymmetry preserved through skew shifts") {
  Philox rng(9, 9);
  for (int t = 0; t < 20; ++t) {
    int M = 3;
    Mat phi = Mat::Zero(M, M), alpha = Mat::Zero(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = i + 1; j < M; ++j) {
        phi(i, j) = rng.next_double() - 0.5;
        phi(j, i) = -phi(i, j);
        alpha(i, j) = rng.next_double() - 0.5;
        alpha(j, i) = -alpha(i, j);
      }
    Mat shifted = phi - alpha;
    CHECK((shifted + shifted.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  }
}
