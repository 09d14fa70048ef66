#pragma once

#include <iosfwd>
#include <vector>

#include "convtest/linalg.hpp"
#include "convtest/polytope.hpp"
#include "convtest/rng.hpp"

namespace convtest {

enum class FactorKind { Gaussian, Poisson, Discrete };

// One observation factor.  Gaussian: N(mu_k, Sigma_k) on R^{m_k}.  Poisson:
// m_k independent counts with intensities mu_k.  Discrete: one draw from
// {1..m_k} with probabilities mu_k.  `repeat` i.i.d. copies are observed.
struct SchemeFactor {
  FactorKind kind = FactorKind::Discrete;
  int dim = 1;
  int repeat = 1;
  Mat cov;  // Gaussian only; SPD
  Eigen::LLT<Mat> chol;  // cached Cholesky of cov, computed at construction

  static SchemeFactor gaussian(const Mat& sigma, int repeat = 1);
  static SchemeFactor poisson(int dim, int repeat = 1);
  static SchemeFactor discrete(int m, int repeat = 1);

  int obs_len() const { return (kind == FactorKind::Gaussian) ? dim : dim; }
};

struct ProductScheme {
  std::vector<SchemeFactor> factors;

  int param_dim() const;
  // Flattened observation length: factor-major, then repeats; one real per
  // Gaussian coordinate, one count per Poisson coordinate, one outcome per
  // Discrete factor.
  int obs_len() const;
  // Multidimensional Poisson factors split into scalar ones (direct products
  // are associative, so nothing is lost).
  ProductScheme expanded() const;
  void validate() const;
};

// psi_k and its gradients for one factor.  Gaussian: -1/4 (x-y)' Sigma^{-1}
// (x-y); Poisson: -sum_i (sqrt(x_i)-sqrt(y_i))^2; Discrete:
// 2 ln sum_i sqrt(x_i y_i).  Gradients at boundary points are clamped to
// stay finite; values are exact.
struct PsiValue {
  double value = 0.0;
  Vec grad_x, grad_y;
};
PsiValue psi_eval(const SchemeFactor& factor, const Vec& xk, const Vec& yk,
                  bool want_grad = true);

// One per-factor block of a detector.
struct DetectorPart {
  FactorKind kind = FactorKind::Discrete;
  int dim = 1;
  int repeat = 1;
  Vec xi;        // Gaussian/Poisson: linear coefficients; Discrete: table
  double alpha = 0.0;  // Gaussian/Poisson offset; 0 for Discrete
};

// phi(omega) = sum over factors and repeats of the per-observation parts,
// minus the global shift a.
struct Detector {
  std::vector<DetectorPart> parts;
  double shift = 0.0;

  double eval(const Vec& obs) const;
  int obs_len() const;
};

// Exact formula application at an interior point pair; shift starts at 0.
DetectorPart build_detector(const SchemeFactor& factor, const Vec& xk, const Vec& yk);

// Assembles the full product detector at (x, y) given in scheme parameter
// order (expanded scheme).
Detector build_product_detector(const ProductScheme& expanded_scheme, const Vec& x,
                                const Vec& y);

// Draws one flattened observation at parameter point mu.
Vec sample_obs(const ProductScheme& scheme, const Vec& mu, Philox& rng);

// Throws std::invalid_argument when obs does not match the scheme layout
// (length, integrality, Discrete range).
void validate_obs(const ProductScheme& scheme, const Vec& obs);

// Observation files: one observation per line, factor-major order, integers
// for Discrete/Poisson entries, decimal reals for Gaussian entries.
void write_obs_file(std::ostream& os, const ProductScheme& scheme,
                    const std::vector<Vec>& observations);
std::vector<Vec> read_obs_file(std::istream& is, const ProductScheme& scheme);

}  // namespace convtest
