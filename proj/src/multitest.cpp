#include "convtest/multitest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "convtest/polytope.hpp"
#include "convtest/solver_kernels.hpp"

namespace convtest {

Mat DetectorMatrix::eval_all(const Vec& obs) const {
  Mat v = Mat::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (dets[i][j]) v(i, j) = dets[i][j](obs);
  return v;
}

void DetectorMatrix::validate() const {
  if (risks.rows() != rows || risks.cols() != cols)
    throw std::invalid_argument("DetectorMatrix: risk matrix shape mismatch");
  if (antisymmetric && rows != cols)
    throw std::invalid_argument("DetectorMatrix: antisymmetric requires a square matrix");
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      if (antisymmetric && i == j) continue;
      if (!(risks(i, j) > 0.0))
        throw std::invalid_argument("DetectorMatrix: risks must be positive");
    }
}

UnionTest union_assemble(const Mat& E) {
  if (E.size() == 0) throw std::invalid_argument("union_assemble: empty risk matrix");
  if (E.minCoeff() <= 0.0)
    throw std::invalid_argument("union_assemble: risk matrix must be entrywise positive");
  SingularTriple t = spectral_norm_nonneg(E);
  UnionTest u;
  u.eps = t.sigma;
  u.g = t.g;
  u.h = t.h;
  u.shifts.resize(E.rows(), E.cols());
  for (int i = 0; i < E.rows(); ++i)
    for (int j = 0; j < E.cols(); ++j) u.shifts(i, j) = std::log(t.h[j] / t.g[i]);
  return u;
}

double UnionTest::aggregate(const Mat& phi_values, AggregationMode mode) const {
  const int m = static_cast<int>(phi_values.rows());
  const int n = static_cast<int>(phi_values.cols());
  Mat M = phi_values - shifts;
  double maxmin = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) maxmin = std::max(maxmin, M.row(i).minCoeff());
  if (mode == AggregationMode::MaxMin) return maxmin;
  double minmax = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) minmax = std::min(minmax, M.col(j).maxCoeff());
  if (mode == AggregationMode::MinMax) return minmax;

  // Value of the matrix game max_{lam in simplex} min_{mu in simplex}
  // lam' M mu, solved exactly as a small LP; always lies in
  // [maxmin, minmax], clamp against roundoff.
  PolytopeSpec S;
  S.dim = m + 1;
  S.lower = Vec::Zero(m + 1);
  S.upper = Vec::Ones(m + 1);
  S.lower[m] = M.minCoeff();
  S.upper[m] = M.maxCoeff();
  Vec sum = Vec::Zero(m + 1);
  sum.head(m).setOnes();
  S.add_eq(sum, 1.0);
  for (int j = 0; j < n; ++j) {
    Vec row = Vec::Zero(m + 1);
    for (int i = 0; i < m; ++i) row[i] = -M(i, j);
    row[m] = 1.0;
    S.add_ineq(row, 0.0);  // v <= (lam' M)_j
  }
  Vec c = Vec::Zero(m + 1);
  c[m] = -1.0;
  LpResult r = lp_minimize(c, S);
  if (!r.feasible) return maxmin;  // cannot happen for finite payoffs
  return std::clamp(-r.value, maxmin, minmax);
}

ShiftPlan weighted_shifts(const Mat& risks, const Vec& importance) {
  const int M = static_cast<int>(risks.rows());
  if (risks.cols() != M || M < 2)
    throw std::invalid_argument("weighted_shifts: need a square matrix, M >= 2");
  if ((importance.array() <= 0.0).any())
    throw std::invalid_argument("weighted_shifts: importance weights must be positive");
  Mat Ebar(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) Ebar(i, j) = (i == j) ? 0.0 : importance[i] * risks(i, j);
  PerronPair p = perron_positive(Ebar);
  ShiftPlan plan;
  plan.eps = p.rho;
  plan.g = p.g;
  plan.alpha.resize(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) plan.alpha(i, j) = std::log(p.g[j]) - std::log(p.g[i]);
  return plan;
}

ClosenessRelation ClosenessRelation::diagonal(int M) {
  ClosenessRelation c;
  c.M = M;
  c.close.assign(M, std::vector<bool>(M, false));
  for (int i = 0; i < M; ++i) c.close[i][i] = true;
  return c;
}

ClosenessRelation ClosenessRelation::from_partition(
    const std::vector<std::vector<int>>& blocks, int M) {
  ClosenessRelation c = diagonal(M);
  std::vector<int> seen(M, 0);
  for (const auto& blk : blocks)
    for (int a : blk) {
      if (a < 0 || a >= M || seen[a]++) throw std::invalid_argument("bad partition");
      for (int b : blk) {
        c.close[a][b] = true;
      }
    }
  for (int i = 0; i < M; ++i)
    if (!seen[i]) throw std::invalid_argument("partition does not cover all hypotheses");
  return c;
}

void ClosenessRelation::validate() const {
  if (static_cast<int>(close.size()) != M)
    throw std::invalid_argument("ClosenessRelation: shape mismatch");
  for (int i = 0; i < M; ++i) {
    if (static_cast<int>(close[i].size()) != M)
      throw std::invalid_argument("ClosenessRelation: shape mismatch");
    if (!close[i][i])
      throw std::invalid_argument("ClosenessRelation: diagonal pairs must be close");
  }
}

bool ClosenessRelation::is_partition_induced() const {
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      if (close[i][j] != close[j][i]) return false;
      if (!close[i][j]) continue;
      for (int k = 0; k < M; ++k)
        if (close[j][k] != close[i][k]) return false;
    }
  return true;
}

namespace {

double closeness_objective(const Mat& risks, const ClosenessRelation& C, const Mat& alpha,
                           int* argmax = nullptr) {
  const int M = C.M;
  double best = -1.0;
  int arg = 0;
  for (int i = 0; i < M; ++i) {
    double row = 0.0;
    for (int j = 0; j < M; ++j)
      if (!C.close[i][j]) row += risks(i, j) * std::exp(alpha(i, j));
    if (row > best) {
      best = row;
      arg = i;
    }
  }
  if (argmax) *argmax = arg;
  return std::max(best, 0.0);
}

// Lower bound: for any row weights q, f(alpha) >= sum over two-sided free
// pairs of 2 sqrt(q_i q_j eps_ij eps_ji); tight at the Perron weights in the
// partition-induced case.
double closeness_lower_bound(const Mat& risks, const ClosenessRelation& C, const Vec& q) {
  double lb = 0.0;
  for (int i = 0; i < C.M; ++i)
    for (int j = i + 1; j < C.M; ++j)
      if (!C.close[i][j] && !C.close[j][i])
        lb += 2.0 * std::sqrt(q[i] * q[j] * risks(i, j) * risks(j, i));
  return lb;
}

}  // namespace

ShiftPlan closeness_shifts(const Mat& risks, const ClosenessRelation& C) {
  C.validate();
  const int M = C.M;
  if (risks.rows() != M || risks.cols() != M)
    throw std::invalid_argument("closeness_shifts: risk matrix shape mismatch");

  ShiftPlan plan;
  plan.alpha = Mat::Zero(M, M);

  bool any_open = false;
  for (int i = 0; i < M && !any_open; ++i)
    for (int j = 0; j < M; ++j)
      if (!C.close[i][j]) any_open = true;
  if (!any_open) {
    plan.all_close = true;
    plan.eps = 0.0;
    return plan;
  }

  // D zeroes the entries inside the relation.
  Mat D = risks;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      if (C.close[i][j]) D(i, j) = 0.0;

  if (C.is_partition_induced()) {
    SingularTriple t = spectral_norm_nonneg(D);
    if (t.g.minCoeff() > 0.0) {
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) plan.alpha(i, j) = std::log(t.g[j]) - std::log(t.g[i]);
      plan.eps = t.sigma;
      plan.gap = 0.0;
      plan.g = t.g;
      return plan;
    }
    // reducible D: fall through to the subgradient path
  }

  // General relation: Polyak subgradient descent on the strict upper
  // triangle, warm-started from the symmetric closure of C when usable.
  {
    ClosenessRelation sym = C;
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        if (C.close[i][j] || C.close[j][i]) {
          sym.close[i][j] = true;
          sym.close[j][i] = true;
        }
    Mat Dsym = risks;
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        if (sym.close[i][j]) Dsym(i, j) = 0.0;
    if (Dsym.maxCoeff() > 0.0) {
      SingularTriple t = spectral_norm_nonneg(Dsym);
      if (t.g.minCoeff() > 0.0) {
        for (int i = 0; i < M; ++i)
          for (int j = 0; j < M; ++j)
            plan.alpha(i, j) = std::log(t.g[j]) - std::log(t.g[i]);
        plan.g = t.g;
      }
    }
  }

  Mat best_alpha = plan.alpha;
  double fbest = closeness_objective(risks, C, plan.alpha);
  Vec q = (plan.g.size() == M && plan.g.minCoeff() > 0.0)
              ? Vec(plan.g.array().square())
              : Vec(Vec::Ones(M));
  q /= q.sum();
  double lower = closeness_lower_bound(risks, C, q);

  Mat alpha = plan.alpha;
  double delta = std::max(0.5 * fbest, 1e-8);
  int since_improve = 0;
  for (int it = 0; it < 20000 && fbest - lower > 1e-9 * (1.0 + fbest); ++it) {
    int istar = 0;
    double f = closeness_objective(risks, C, alpha, &istar);
    if (f < fbest - 1e-14) {
      fbest = f;
      best_alpha = alpha;
      since_improve = 0;
    } else if (++since_improve > 500) {
      delta *= 0.5;
      since_improve = 0;
      if (delta < 1e-10) break;
    }
    // Subgradient in the upper-triangle parametrization.
    Mat G = Mat::Zero(M, M);
    double norm2 = 0.0;
    for (int j = 0; j < M; ++j) {
      if (!C.close[istar][j]) {
        double gij = risks(istar, j) * std::exp(alpha(istar, j));
        int a = std::min(istar, j), b = std::max(istar, j);
        double sgn = (istar == a) ? 1.0 : -1.0;
        G(a, b) += sgn * gij;
      }
    }
    for (int a = 0; a < M; ++a)
      for (int b = a + 1; b < M; ++b) norm2 += G(a, b) * G(a, b);
    if (norm2 < 1e-24) break;
    double target = std::max(lower, fbest - delta);
    double step = (f - target) / norm2;
    if (step <= 0.0) step = delta / norm2;
    for (int a = 0; a < M; ++a)
      for (int b = a + 1; b < M; ++b) {
        alpha(a, b) -= step * G(a, b);
        alpha(b, a) = -alpha(a, b);
      }
  }
  plan.alpha = best_alpha;
  plan.eps = fbest;
  plan.gap = std::max(0.0, fbest - lower);
  return plan;
}

std::vector<int> run_multitest(const Mat& phi_values, const Mat& alpha,
                               const ClosenessRelation& C) {
  C.validate();
  const int M = C.M;
  if (phi_values.rows() != M || phi_values.cols() != M || alpha.rows() != M ||
      alpha.cols() != M)
    throw std::invalid_argument("run_multitest: shape mismatch");
  std::vector<int> accepted;
  for (int i = 0; i < M; ++i) {
    bool ok = true;
    for (int j = 0; j < M && ok; ++j)
      if (!C.close[i][j] && !(phi_values(i, j) - alpha(i, j) > 0.0)) ok = false;
    if (ok) accepted.push_back(i);
  }
  return accepted;
}

MultipleUnionsResult multiple_unions(const std::vector<std::vector<int>>& blocks,
                                     const Mat& risks, const Mat& phi_values) {
  const int M = static_cast<int>(risks.rows());
  if (blocks.size() < 2) throw std::invalid_argument("multiple_unions: need L >= 2 blocks");
  ClosenessRelation C = ClosenessRelation::from_partition(blocks, M);
  ShiftPlan plan = closeness_shifts(risks, C);
  MultipleUnionsResult out;
  out.eps = plan.eps;
  out.accepted_atoms = run_multitest(phi_values, plan.alpha, C);
  for (int atom : out.accepted_atoms) {
    for (size_t l = 0; l < blocks.size(); ++l)
      if (std::find(blocks[l].begin(), blocks[l].end(), atom) != blocks[l].end()) {
        if (out.accepted_block && *out.accepted_block != static_cast<int>(l))
          throw std::logic_error("multiple_unions: two blocks accepted");  // unreachable
        out.accepted_block = static_cast<int>(l);
      }
  }
  return out;
}

long long multi_sample_bound(double eps, int M, long long kbar) {
  if (!(eps > 0.0 && eps < 0.25)) throw std::domain_error("multi_sample_bound: eps outside (0,1/4)");
  if (M < 1 || kbar < 1) throw std::invalid_argument("multi_sample_bound: bad M or Kbar");
  double v = 2.0 * std::log(static_cast<double>(M) / eps) /
             (std::log(1.0 / eps) - 2.0 * std::log(2.0)) * static_cast<double>(kbar);
  long long K = static_cast<long long>(std::ceil(v - 1e-9));
  if (static_cast<double>(K) < v - 1e-9) ++K;
  return K;
}

}  // namespace convtest
