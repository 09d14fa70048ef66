#include "convtest/normal.hpp"

#include <cmath>

namespace convtest {

double gaussian_pdf(double t) {
  static const double kInvSqrt2Pi = 0.3989422804014326779;
  return kInvSqrt2Pi * std::exp(-0.5 * t * t);
}

double gaussian_tail(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation for the standard normal quantile,
// good to ~1e-9 on its own; used only as the Newton starting point.
double quantile_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double gaussian_tail_inv(double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("gaussian_tail_inv: s outside (0,1)");
  // gaussian_tail(t) = s  <=>  t = Phi^{-1}(1-s)
  double t = quantile_approx(1.0 - s);
  for (int it = 0; it < 4; ++it) {
    double err = gaussian_tail(t) - s;      // decreasing in t
    double deriv = -gaussian_pdf(t);
    double step = err / deriv;
    if (!std::isfinite(step)) break;
    t -= step;
  }
  return t;
}

}  // namespace convtest
