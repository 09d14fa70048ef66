#include "convtest/solver_kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace convtest {

Mat expm(const Mat& L) {
  const int n = static_cast<int>(L.rows());
  if (L.cols() != n) throw std::invalid_argument("expm: matrix must be square");
  if (!L.allFinite()) throw std::invalid_argument("expm: nonfinite entries");

  // Pade-13 coefficients.
  static const double c[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;

  double nrm = 0.0;
  for (int j = 0; j < n; ++j) nrm = std::max(nrm, L.col(j).cwiseAbs().sum());
  int s = 0;
  if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
  Mat A = L / std::pow(2.0, s);

  Mat A2 = A * A;
  Mat A4 = A2 * A2;
  Mat A6 = A2 * A4;
  Mat I = Mat::Identity(n, n);
  Mat U = A * (A6 * (c[13] * A6 + c[11] * A4 + c[9] * A2) + c[7] * A6 + c[5] * A4 +
               c[3] * A2 + c[1] * I);
  Mat V = A6 * (c[12] * A6 + c[10] * A4 + c[8] * A2) + c[6] * A6 + c[4] * A4 +
          c[2] * A2 + c[0] * I;
  Mat R = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < s; ++i) R = R * R;
  return R;
}

SingularTriple spectral_norm_nonneg(const Mat& E) {
  const int m = static_cast<int>(E.rows());
  const int n = static_cast<int>(E.cols());
  if (E.minCoeff() < 0.0) throw std::invalid_argument("spectral_norm_nonneg: negative entry");
  if (E.maxCoeff() <= 0.0) throw std::invalid_argument("spectral_norm_nonneg: zero matrix");

  Vec h = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double sigma2 = 0.0;
  for (long long it = 0; it < 1000000; ++it) {
    Vec w = E.transpose() * (E * h);
    double norm = w.norm();
    if (norm == 0.0) break;  // h in the kernel; restart off the all-ones start
    Vec h_new = w / norm;
    double change = (h_new - h).norm();
    h = h_new;
    double new_sigma2 = h.dot(E.transpose() * (E * h));
    bool settled = std::fabs(new_sigma2 - sigma2) <= 1e-12 * std::max(1.0, new_sigma2);
    sigma2 = new_sigma2;
    if (settled && change <= 1e-13) break;
  }
  SingularTriple out;
  out.sigma = std::sqrt(std::max(sigma2, 0.0));
  // Nonnegativity can be lost to roundoff only; clamp.
  out.h = h.cwiseMax(0.0);
  out.h /= out.h.norm();
  Vec g = E * out.h;
  double gn = g.norm();
  if (gn > 0.0)
    out.g = g / gn;
  else
    out.g = Vec::Ones(m) / std::sqrt(static_cast<double>(m));
  return out;
}

PerronPair perron_positive(const Mat& Ebar) {
  const int n = static_cast<int>(Ebar.rows());
  if (n < 2 || Ebar.cols() != n)
    throw std::invalid_argument("perron_positive: need a square matrix, n >= 2");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!(Ebar(i, j) > 0.0))
        throw std::invalid_argument("perron_positive: off-diagonal entries must be positive");
    }

  // Shift so the Perron root strictly dominates in modulus (a zero-diagonal
  // nonnegative matrix can have -rho as an eigenvalue, e.g. any symmetric
  // 2x2 one).
  double shift = 0.0;
  for (int i = 0; i < n; ++i) shift = std::max(shift, Ebar.row(i).cwiseAbs().sum());
  Mat A = Ebar + shift * Mat::Identity(n, n);

  Vec g = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double lam = 0.0;
  for (long long it = 0; it < 1000000; ++it) {
    Vec w = A * g;
    double new_lam = g.dot(w);  // Rayleigh functional; exact at the fixed point
    double norm = w.norm();
    Vec g_new = w / norm;
    double change = (g_new - g).norm();
    g = g_new;
    bool settled = std::fabs(new_lam - lam) <= 1e-13 * std::max(1.0, std::fabs(new_lam));
    lam = new_lam;
    if (settled && change <= 1e-14) break;
  }
  // Polish the eigenvalue with the converged positive vector.
  Vec Ag = Ebar * g;
  double rho = g.dot(Ag) / g.dot(g);
  PerronPair out;
  out.rho = rho;
  out.g = g / g.norm();
  return out;
}

double bisect_max_param(const std::function<bool(double)>& feasible, double r_lo,
                        double r_hi, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisect_max_param: tol must be > 0");
  if (r_hi < r_lo) throw std::invalid_argument("bisect_max_param: empty interval");
  if (!feasible(r_lo)) throw std::runtime_error("bisect_max_param: infeasible at r_lo");
  if (feasible(r_hi)) return r_hi;
  double lo = r_lo, hi = r_hi;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace convtest
