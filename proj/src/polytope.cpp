#include "convtest/polytope.hpp"

#include <cmath>
#include <stdexcept>

#include "convtest/simplex.hpp"

namespace convtest {

PolytopeSpec PolytopeSpec::box(const Vec& lo, const Vec& up) {
  PolytopeSpec s;
  s.dim = static_cast<int>(lo.size());
  s.lower = lo;
  s.upper = up;
  s.validate();
  return s;
}

PolytopeSpec PolytopeSpec::simplex(int m) {
  PolytopeSpec s;
  s.dim = m;
  s.lower = Vec::Zero(m);
  s.upper = Vec::Ones(m);
  s.eq.emplace_back(Vec::Ones(m), 1.0);
  return s;
}

PolytopeSpec PolytopeSpec::singleton(const Vec& point) {
  PolytopeSpec s;
  s.dim = static_cast<int>(point.size());
  s.lower = point;
  s.upper = point;
  return s;
}

PolytopeSpec& PolytopeSpec::add_ineq(const Vec& a, double b) {
  ineq.emplace_back(a, b);
  return *this;
}

PolytopeSpec& PolytopeSpec::add_eq(const Vec& c, double d) {
  eq.emplace_back(c, d);
  return *this;
}

void PolytopeSpec::validate() const {
  if (dim <= 0) throw std::invalid_argument("PolytopeSpec: dim must be positive");
  if (lower.size() != dim || upper.size() != dim)
    throw std::invalid_argument("PolytopeSpec: bound sizes do not match dim");
  for (int i = 0; i < dim; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw std::invalid_argument("PolytopeSpec: bounds must be finite");
    if (lower[i] > upper[i])
      throw std::invalid_argument("PolytopeSpec: lower > upper");
  }
  for (const auto& [a, b] : ineq)
    if (a.size() != dim || !std::isfinite(b))
      throw std::invalid_argument("PolytopeSpec: malformed inequality row");
  for (const auto& [c, d] : eq)
    if (c.size() != dim || !std::isfinite(d))
      throw std::invalid_argument("PolytopeSpec: malformed equality row");
}

namespace {

// Reduces the equality system by Gaussian elimination with partial pivoting.
// Returns false when the system is inconsistent; dependent rows are dropped.
bool reduce_equalities(Mat& E, Vec& d) {
  int rows = static_cast<int>(E.rows());
  int cols = static_cast<int>(E.cols());
  int rank = 0;
  for (int col = 0; col < cols && rank < rows; ++col) {
    int piv = -1;
    double best = 0.0;
    for (int r = rank; r < rows; ++r) {
      double a = std::fabs(E(r, col));
      if (a > best) {
        best = a;
        piv = r;
      }
    }
    if (piv < 0 || best < 1e-12) continue;
    E.row(piv).swap(E.row(rank));
    std::swap(d[piv], d[rank]);
    for (int r = 0; r < rows; ++r) {
      if (r == rank) continue;
      double f = E(r, col) / E(rank, col);
      if (f != 0.0) {
        E.row(r) -= f * E.row(rank);
        d[r] -= f * d[rank];
      }
    }
    ++rank;
  }
  for (int r = rank; r < rows; ++r) {
    double scale = 1.0 + std::fabs(d[r]);
    if (std::fabs(d[r]) > 1e-9 * scale && E.row(r).cwiseAbs().maxCoeff() < 1e-12)
      return false;
  }
  E.conservativeResize(rank, cols);
  d.conservativeResize(rank);
  return true;
}

}  // namespace

struct LpWorkspace::Impl {
  std::unique_ptr<BoundedSimplex> solver;
  int dim = 0;
  int nrows = 0;
};

void LpWorkspace::reset() { impl_.reset(); }

LpResult lp_minimize(const Vec& c, const PolytopeSpec& S, LpWorkspace* ws) {
  if (c.size() != S.dim) throw std::invalid_argument("lp_minimize: cost size mismatch");

  if (S.ineq.empty() && S.eq.empty()) {
    // Pure box: coordinatewise closed form (ties to the lower bound).
    LpResult res;
    res.feasible = true;
    res.x.resize(S.dim);
    for (int i = 0; i < S.dim; ++i) res.x[i] = (c[i] < 0.0) ? S.upper[i] : S.lower[i];
    res.value = c.dot(res.x);
    return res;
  }

  BoundedSimplex* solver = nullptr;
  std::unique_ptr<BoundedSimplex> local;
  if (ws && ws->impl_ && ws->impl_->solver && ws->impl_->dim == S.dim) {
    solver = ws->impl_->solver.get();
  } else {
    int n = S.dim;
    Mat E(static_cast<int>(S.eq.size()), n);
    Vec dE(static_cast<int>(S.eq.size()));
    for (size_t r = 0; r < S.eq.size(); ++r) {
      E.row(static_cast<int>(r)) = S.eq[r].first.transpose();
      dE[static_cast<int>(r)] = S.eq[r].second;
    }
    if (!reduce_equalities(E, dE)) return {};  // inconsistent equalities

    int mi = static_cast<int>(S.ineq.size());
    int me = static_cast<int>(E.rows());
    int mrows = mi + me;
    // Row i of the standardized system: A x + s_i = b, with slack bounds
    // [0, b - min_box(A x)] for inequalities and [0, 0] for equalities.
    Mat M = Mat::Zero(mrows, n + mrows);
    Vec b(mrows), L(n + mrows), U(n + mrows);
    L.head(n) = S.lower;
    U.head(n) = S.upper;
    for (int i = 0; i < mi; ++i) {
      const Vec& a = S.ineq[i].first;
      M.row(i).head(n) = a.transpose();
      M(i, n + i) = 1.0;
      b[i] = S.ineq[i].second;
      double boxmin = 0.0;
      for (int j = 0; j < n; ++j)
        boxmin += (a[j] > 0.0) ? a[j] * S.lower[j] : a[j] * S.upper[j];
      double cap = b[i] - boxmin;
      if (cap < -1e-9 * (1.0 + std::fabs(b[i]))) return {};  // unsatisfiable row
      L[n + i] = 0.0;
      U[n + i] = std::max(cap, 0.0);
    }
    for (int i = 0; i < me; ++i) {
      M.row(mi + i).head(n) = E.row(i);
      M(mi + i, n + mi + i) = 1.0;
      b[mi + i] = dE[i];
      L[n + mi + i] = 0.0;
      U[n + mi + i] = 0.0;
    }
    local = std::make_unique<BoundedSimplex>(M, b, L, U);
    solver = local.get();
  }

  if (!solver->feasible()) return {};

  LpResult res;
  res.feasible = true;
  Vec cpad = Vec::Zero(solver->num_columns());
  cpad.head(S.dim) = c;
  Vec z;
  double v;
  if (solver->solve(cpad, z, v) != BoundedSimplex::Status::Optimal) return {};
  res.x = z.head(S.dim);
  res.value = c.dot(res.x);

  if (ws) {
    if (!ws->impl_) ws->impl_ = std::make_shared<LpWorkspace::Impl>();
    if (local) {
      ws->impl_->solver = std::move(local);
      ws->impl_->dim = S.dim;
    }
  }
  return res;
}

SetCheck check_set(const PolytopeSpec& S, const DomainTag& tag) {
  S.validate();
  LpResult probe = lp_minimize(Vec::Zero(S.dim), S);
  if (!probe.feasible) return {SetCheckStatus::Empty, -1, 0.0};
  if (tag.kind == DomainKind::Unrestricted) return {};
  if (!(tag.margin > 0.0)) throw std::invalid_argument("DomainTag: margin must be > 0");
  if (tag.kind == DomainKind::SimplexInterior) {
    bool has_sum_row = false;
    for (const auto& [cc, dd] : S.eq) {
      if (std::fabs(dd - 1.0) < 1e-12 && (cc.array() - 1.0).abs().maxCoeff() < 1e-12)
        has_sum_row = true;
    }
    if (!has_sum_row)
      throw std::invalid_argument("simplex-interior tag requires the sum-to-one equality row");
  }
  for (int i = 0; i < S.dim; ++i) {
    Vec ci = Vec::Zero(S.dim);
    ci[i] = 1.0;
    if (tag.kind == DomainKind::PositiveOrthant) {
      // Poisson parameters: every point of S must stay margin-deep inside
      // the positive orthant.
      LpResult lo = lp_minimize(ci, S);
      if (!lo.feasible) return {SetCheckStatus::Empty, -1, 0.0};
      if (lo.value < tag.margin - 1e-12)
        return {SetCheckStatus::MarginViolated, i, lo.value};
    } else {
      // Simplex interior: reject coordinates pinned below the margin (set
      // touches the boundary of the simplex with no way off it).
      LpResult hi = lp_minimize(Vec(-ci), S);
      if (!hi.feasible) return {SetCheckStatus::Empty, -1, 0.0};
      if (-hi.value < tag.margin - 1e-12)
        return {SetCheckStatus::MarginViolated, i, -hi.value};
    }
  }
  return {};
}

}  // namespace convtest
