#include "convtest/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace convtest {

BoundedSimplex::BoundedSimplex(const Mat& M, const Vec& b, const Vec& L, const Vec& U)
    : m_(static_cast<int>(M.rows())),
      n_(static_cast<int>(M.cols())),
      b_(b),
      L_(L),
      U_(U) {
  ncol_ = n_ + m_;  // artificials appended
  M_.resize(m_, ncol_);
  M_.leftCols(n_) = M;
  M_.rightCols(m_).setZero();
  L_.conservativeResize(ncol_);
  U_.conservativeResize(ncol_);
  state_.assign(ncol_, VarState::AtLower);
  basis_.assign(m_, -1);
  add_artificials();

  // Phase 1: minimize the sum of artificials.
  Vec c1 = Vec::Zero(ncol_);
  c1.tail(m_).setOnes();
  run(c1);
  refactorize();
  double p1 = objective(c1);
  double scale = 1.0 + b_.cwiseAbs().maxCoeff();
  feasible_ = (p1 <= kFeasTol * scale);
  if (!feasible_) return;

  // Freeze artificials at zero; pivot basic ones out where possible.
  for (int j = n_; j < ncol_; ++j) {
    L_[j] = 0.0;
    U_[j] = 0.0;
    if (state_[j] == VarState::AtUpper) state_[j] = VarState::AtLower;
  }
  for (int r = 0; r < m_; ++r) {
    if (basis_[r] < n_) continue;
    int pick = -1;
    double best = kPivTol;
    for (int j = 0; j < n_; ++j) {
      if (state_[j] == VarState::Basic) continue;
      if (L_[j] == U_[j]) continue;
      double a = std::fabs(T_(r, j));
      if (a > best) {
        best = a;
        pick = j;
      }
    }
    if (pick >= 0) {
      int art = basis_[r];
      pivot(r, pick);
      state_[art] = VarState::AtLower;
      state_[pick] = VarState::Basic;
      basis_[r] = pick;
    }
    // else: redundant row, the zero-fixed artificial stays basic harmlessly
  }
  refactorize();  // also restores exact basic values after the degenerate pivots
}

void BoundedSimplex::add_artificials() {
  // Nonbasic structural variables start at their lower bound.
  Vec z0 = L_.head(n_);
  Vec r = b_ - M_.leftCols(n_) * z0;
  for (int i = 0; i < m_; ++i) {
    int j = n_ + i;
    double sgn = (r[i] >= 0.0) ? 1.0 : -1.0;
    M_(i, j) = sgn;
    L_[j] = 0.0;
    U_[j] = std::fabs(r[i]);
    basis_[i] = j;
    state_[j] = VarState::Basic;
  }
  T_ = M_;
  for (int i = 0; i < m_; ++i)
    if (M_(i, n_ + i) < 0.0) T_.row(i) = -T_.row(i);
  xB_.resize(m_);
  for (int i = 0; i < m_; ++i) xB_[i] = std::fabs(r[i]);
}

void BoundedSimplex::refactorize() {
  Mat B(m_, m_);
  for (int i = 0; i < m_; ++i) B.col(i) = M_.col(basis_[i]);
  Eigen::PartialPivLU<Mat> lu(B);
  T_ = lu.solve(M_);
  Vec rhs = b_;
  for (int j = 0; j < ncol_; ++j) {
    if (state_[j] == VarState::Basic) continue;
    double v = (state_[j] == VarState::AtLower) ? L_[j] : U_[j];
    if (v != 0.0) rhs -= M_.col(j) * v;
  }
  xB_ = lu.solve(rhs);
  pivots_since_refactor_ = 0;
}

void BoundedSimplex::compute_reduced_costs(const Vec& c) {
  Vec cB(m_);
  for (int i = 0; i < m_; ++i) cB[i] = c[basis_[i]];
  d_ = c - T_.transpose() * cB;
  for (int i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
}

bool BoundedSimplex::eligible(int j) const {
  if (state_[j] == VarState::Basic) return false;
  if (L_[j] == U_[j]) return false;
  return true;
}

int BoundedSimplex::price(const Vec& c, bool bland) const {
  double dtol = 1e-10 * (1.0 + c.cwiseAbs().maxCoeff());
  int pick = -1;
  double best = dtol;
  for (int j = 0; j < ncol_; ++j) {
    if (!eligible(j)) continue;
    double viol = 0.0;
    if (state_[j] == VarState::AtLower && d_[j] < -dtol) viol = -d_[j];
    if (state_[j] == VarState::AtUpper && d_[j] > dtol) viol = d_[j];
    if (viol <= 0.0) continue;
    if (bland) return j;
    if (viol > best) {
      best = viol;
      pick = j;
    }
  }
  return pick;
}

void BoundedSimplex::pivot(int row, int col) {
  double piv = T_(row, col);
  T_.row(row) /= piv;
  for (int i = 0; i < m_; ++i) {
    if (i == row) continue;
    double f = T_(i, col);
    if (f != 0.0) T_.row(i) -= f * T_.row(row);
  }
  double dj = d_[col];
  if (dj != 0.0) d_ -= dj * T_.row(row).transpose();
  ++pivots_since_refactor_;
}

int BoundedSimplex::run(const Vec& c) {
  compute_reduced_costs(c);
  bool bland = false;
  int stall = 0;
  int npiv = 0;
  const long long max_pivots = 2000000;
  for (;;) {
    if (npiv >= max_pivots) throw std::runtime_error("simplex: pivot limit exceeded");
    int j = price(c, bland);
    if (j < 0) {
      // Re-check against a fresh factorization before declaring optimality.
      if (pivots_since_refactor_ > 0) {
        refactorize();
        compute_reduced_costs(c);
        j = price(c, bland);
        if (j < 0) break;
      } else {
        break;
      }
    }
    double dir = (state_[j] == VarState::AtLower) ? 1.0 : -1.0;
    // Ratio test: keep every basic variable inside its bounds; the entering
    // variable is limited by its own range (bound flip).  Ties go to the
    // lowest basic variable index.
    double best_t = U_[j] - L_[j];
    int leave_row = -1;
    double leave_bound = 0.0;
    const double tie = 1e-12;
    for (int i = 0; i < m_; ++i) {
      double coeff = dir * T_(i, j);
      int bi = basis_[i];
      double t;
      double bnd;
      if (coeff > kPivTol) {
        t = (xB_[i] - L_[bi]) / coeff;
        bnd = L_[bi];
      } else if (coeff < -kPivTol) {
        t = (U_[bi] - xB_[i]) / (-coeff);
        bnd = U_[bi];
      } else {
        continue;
      }
      if (t < 0.0) t = 0.0;
      bool take = false;
      if (t < best_t - tie) {
        take = true;
      } else if (t <= best_t + tie && leave_row >= 0 && basis_[i] < basis_[leave_row]) {
        take = true;
        t = best_t;
      }
      if (take) {
        best_t = std::min(t, best_t);
        leave_row = i;
        leave_bound = bnd;
      }
    }
    double tmax = best_t;
    if (tmax < 0.0) tmax = 0.0;
    if (tmax <= tie) {
      ++stall;
      if (stall > 64) bland = true;
    } else {
      stall = 0;
      bland = false;
    }
    // Apply the step.
    if (tmax > 0.0) xB_ -= (dir * tmax) * T_.col(j);
    if (leave_row < 0) {
      // Bound flip of the entering variable.
      state_[j] = (state_[j] == VarState::AtLower) ? VarState::AtUpper : VarState::AtLower;
    } else {
      int leaving = basis_[leave_row];
      double enter_val = ((dir > 0.0) ? L_[j] : U_[j]) + dir * tmax;
      state_[leaving] =
          (leave_bound == L_[leaving]) ? VarState::AtLower : VarState::AtUpper;
      pivot(leave_row, j);
      basis_[leave_row] = j;
      state_[j] = VarState::Basic;
      xB_[leave_row] = enter_val;
    }
    ++npiv;
    if (pivots_since_refactor_ >= kRefactorPeriod) {
      refactorize();
      compute_reduced_costs(c);
    }
  }
  return npiv;
}

Vec BoundedSimplex::current_point() const {
  Vec z(ncol_);
  for (int j = 0; j < ncol_; ++j)
    z[j] = (state_[j] == VarState::AtLower) ? L_[j] : U_[j];
  for (int i = 0; i < m_; ++i) z[basis_[i]] = xB_[i];
  return z;
}

double BoundedSimplex::objective(const Vec& c) const {
  return c.dot(current_point());
}

double BoundedSimplex::residual(const Vec& z) const {
  Vec r = M_.leftCols(n_) * z.head(n_) - b_;
  // artificials are zero after a feasible phase 1
  return r.cwiseAbs().maxCoeff();
}

BoundedSimplex::Status BoundedSimplex::solve(const Vec& c, Vec& z, double& value) {
  if (!feasible_) return Status::Infeasible;
  Vec cfull = Vec::Zero(ncol_);
  cfull.head(n_) = c;
  run(cfull);  // run() only returns once priced optimal on a fresh factorization
  Vec full = current_point();
  z = full.head(n_);
  value = c.dot(z);
  return Status::Optimal;
}

}  // namespace convtest
