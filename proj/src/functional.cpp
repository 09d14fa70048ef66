#include "convtest/functional.hpp"

#include <cmath>
#include <stdexcept>

#include "convtest/sensor.hpp"
#include "convtest/solver_kernels.hpp"

namespace convtest {

double NoiseModel::q(double p) const {
  if (quantile) return quantile(p);
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("NoiseModel::q: p outside (0,1)");
  double lo = -1.0, hi = 1.0;
  while (cdf(lo) > p) lo *= 2.0;
  while (cdf(hi) < p) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

NoiseModel NoiseModel::laplace(double mu, double a) {
  NoiseModel m;
  m.cdf = [mu, a](double t) {
    double z = (t - mu) / a;
    return (z < 0.0) ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
  };
  m.quantile = [mu, a](double p) {
    return (p < 0.5) ? mu + a * std::log(2.0 * p) : mu - a * std::log(2.0 * (1.0 - p));
  };
  return m;
}

NoiseModel NoiseModel::gamma_shape2(double loc, double scale) {
  NoiseModel m;
  m.cdf = [loc, scale](double t) {
    if (t <= loc) return 0.0;
    double z = (t - loc) / scale;
    return 1.0 - std::exp(-z) * (1.0 + z);
  };
  return m;
}

NoiseModel NoiseModel::laplace_mixture(double mu1, double a1, double mu2, double a2) {
  NoiseModel m1 = laplace(mu1, a1), m2 = laplace(mu2, a2);
  NoiseModel m;
  m.cdf = [m1, m2](double t) { return 0.5 * m1.cdf(t) + 0.5 * m2.cdf(t); };
  return m;
}

NoiseModel NoiseModel::point_mass(double at) {
  NoiseModel m;
  m.cdf = [at](double t) { return (t >= at) ? 1.0 : 0.0; };
  m.quantile = [at](double) { return at; };
  return m;
}

Vec default_obs_edges(double a0, double an, int m, double delta, const NoiseModel& noise) {
  if (m < 3) throw std::invalid_argument("default_obs_edges: need at least 3 bins");
  Vec edges(m - 1);
  double b1 = a0 + noise.q(delta);
  double blast = an + noise.q(1.0 - delta);
  if (!(blast > b1)) throw std::invalid_argument("default_obs_edges: degenerate edge quantiles");
  for (int i = 0; i < m - 1; ++i)
    edges[i] = b1 + (blast - b1) * static_cast<double>(i) / static_cast<double>(m - 2);
  return edges;
}

Mat deconvolution_channel(const Vec& signal_centers, const Vec& obs_edges,
                          const NoiseModel& noise) {
  const int n = static_cast<int>(signal_centers.size());
  const int m = static_cast<int>(obs_edges.size()) + 1;
  for (int i = 1; i < m - 1; ++i)
    if (!(obs_edges[i] > obs_edges[i - 1]))
      throw std::invalid_argument("deconvolution_channel: edges must increase");
  Mat A(m, n);
  for (int j = 0; j < n; ++j) {
    double prev = 0.0;
    double acc = 0.0;
    for (int i = 0; i < m - 1; ++i) {
      double F = noise.cdf(obs_edges[i] - signal_centers[j]);
      A(i, j) = F - prev;
      acc += A(i, j);
      prev = F;
    }
    A(m - 1, j) = 1.0 - acc;  // tail mass, exact column sum
  }
  return A;
}

Mat trimmed_channel(const Vec& signal_edges, const NoiseModel& noise) {
  const int n = static_cast<int>(signal_edges.size()) - 1;  // bins I_1..I_n
  if (n < 1) throw std::invalid_argument("trimmed_channel: need at least one signal bin");
  for (int i = 1; i <= n; ++i)
    if (!(signal_edges[i] > signal_edges[i - 1]))
      throw std::invalid_argument("trimmed_channel: edges must increase");
  const int m = n + 1;
  Mat A = Mat::Zero(m, n);
  for (int j = 1; j <= n; ++j) {
    double aj = signal_edges[j];
    A(j - 1, j - 1) = noise.cdf(aj);
    double acc = A(j - 1, j - 1);
    for (int i = j + 1; i <= n; ++i) {
      A(i - 1, j - 1) = noise.cdf(signal_edges[i]) - noise.cdf(signal_edges[i - 1]);
      acc += A(i - 1, j - 1);
    }
    A(m - 1, j - 1) = 1.0 - acc;  // infinite bin absorbs the tail
  }
  return A;
}

FlooredChannel floor_channel(const Mat& A, double eta) {
  FlooredChannel out;
  out.A = A;
  for (int j = 0; j < A.cols(); ++j) {
    for (int i = 0; i < A.rows(); ++i)
      if (out.A(i, j) < eta) out.A(i, j) = eta;
    out.A.col(j) /= out.A.col(j).sum();
  }
  out.perturbation = (out.A - A).cwiseAbs().maxCoeff();
  return out;
}

void FunctionalSpec::validate() const {
  if (channels.empty() || channels.size() != repeats.size())
    throw std::invalid_argument("FunctionalSpec: channels/repeats mismatch");
  const int n = latent_set.dim;
  if (g.size() != n) throw std::invalid_argument("FunctionalSpec: functional size mismatch");
  for (size_t l = 0; l < channels.size(); ++l) {
    if (channels[l].cols() != n)
      throw std::invalid_argument("FunctionalSpec: channel column count mismatch");
    if (repeats[l] < 1) throw std::invalid_argument("FunctionalSpec: repeats must be >= 1");
    for (int j = 0; j < n; ++j)
      if (std::fabs(channels[l].col(j).sum() - 1.0) > 1e-9)
        throw std::invalid_argument("FunctionalSpec: channels must be column-stochastic");
    if (channels[l].minCoeff() <= 0.0)
      throw std::invalid_argument("FunctionalSpec: channel entries must be positive on X (floor first)");
  }
}

ResolutionResult functional_resolution(const FunctionalSpec& spec, double eps,
                                       const FWConfig& cfg, double tol) {
  spec.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("functional_resolution: eps outside (0,1)");

  // rho_max from two LPs.
  LpResult gmin = lp_minimize(spec.g, spec.latent_set);
  LpResult gmax = lp_minimize(Vec(-spec.g), spec.latent_set);
  if (!gmin.feasible) throw std::invalid_argument("functional_resolution: empty latent set");
  double rho_max = std::min(spec.alpha - gmin.value, -gmax.value - spec.alpha);
  if (!(rho_max > 0.0))
    throw std::invalid_argument("functional_resolution: both hypotheses must be nonempty (rho_max > 0)");

  const int n = spec.latent_set.dim;
  int total_rows = 0;
  for (const Mat& A : spec.channels) total_rows += static_cast<int>(A.rows());
  Mat stacked(total_rows, n);
  {
    int off = 0;
    for (const Mat& A : spec.channels) {
      stacked.middleRows(off, A.rows()) = A;
      off += static_cast<int>(A.rows());
    }
  }

  auto solve_at = [&](double r) {
    PairProblem p;
    for (size_t l = 0; l < spec.channels.size(); ++l)
      p.scheme.factors.push_back(SchemeFactor::discrete(
          static_cast<int>(spec.channels[l].rows()), static_cast<int>(spec.repeats[l])));
    p.X.poly = spec.latent_set;
    p.X.poly.add_ineq(spec.g, spec.alpha - r);
    p.X.map = stacked;
    p.Y.poly = spec.latent_set;
    p.Y.poly.add_ineq(Vec(-spec.g), -(spec.alpha + r));
    p.Y.map = stacked;
    return solve_pair(p, cfg);
  };

  // Opt[r] = ln eps*(r) is nonincreasing in r; feasible(r): eps*(r) >= eps.
  auto feasible = [&](double r) { return solve_at(r).eps_star >= eps; };

  ResolutionResult out;
  out.rho_max = rho_max;
  // vartheta is meaningful only for eps < 1/4
  out.theta = (eps < 0.25) ? rate_factor(eps, n, RateFormula::Functional)
                           : std::numeric_limits<double>::quiet_NaN();
  if (!feasible(0.0)) {
    // Already separated at rho = 0: the resolution is 0.
    out.rho = 0.0;
    out.test = solve_at(0.0);
    return out;
  }
  if (feasible(rho_max)) {
    out.degenerate = true;
    out.rho = rho_max;
    out.test = solve_at(rho_max);
    return out;
  }
  out.rho = bisect_max_param(feasible, 0.0, rho_max, tol);
  out.test = solve_at(out.rho);
  return out;
}

}  // namespace convtest
