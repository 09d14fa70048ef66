#pragma once

#include <stdexcept>

namespace convtest {

// Upper tail of the standard normal: Erf(t) = (2*pi)^{-1/2} \int_t^inf e^{-s^2/2} ds.
// Monotone decreasing, Erf(0) = 1/2.
double gaussian_tail(double t);

// Inverse of gaussian_tail on (0,1): gaussian_tail(gaussian_tail_inv(s)) = s
// to 1e-12 absolute.  Throws std::domain_error outside (0,1).
double gaussian_tail_inv(double s);

// Standard normal density.
double gaussian_pdf(double t);

}  // namespace convtest
