#include "convtest/sensor.hpp"

#include <cmath>
#include <stdexcept>

#include "convtest/normal.hpp"
#include "convtest/solver_kernels.hpp"

namespace convtest {

void DetectionSpec::validate(SensorCase which) const {
  const int n = static_cast<int>(signatures.size());
  if (n == 0) throw std::invalid_argument("DetectionSpec: no signatures");
  for (const Vec& e : signatures) {
    if (e.size() != A.cols()) throw std::invalid_argument("DetectionSpec: signature size mismatch");
    if ((A * e).cwiseAbs().maxCoeff() <= 0.0)
      throw std::invalid_argument("DetectionSpec: A e[i] = 0 for some signature");
  }
  if (!(amplitude_cap > 0.0)) throw std::invalid_argument("DetectionSpec: amplitude cap must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("DetectionSpec: eps outside (0,1)");
  if (nuisance.dim != A.cols()) throw std::invalid_argument("DetectionSpec: nuisance dimension mismatch");
  if (which == SensorCase::Gaussian) {
    if (!(sigma > 0.0)) throw std::invalid_argument("DetectionSpec: sigma must be positive");
    // Spot-check V = -V through support functions along the coordinate axes.
    for (int i = 0; i < nuisance.dim; ++i) {
      Vec c = Vec::Zero(nuisance.dim);
      c[i] = 1.0;
      LpResult lo = lp_minimize(c, nuisance);
      LpResult hi = lp_minimize(Vec(-c), nuisance);
      if (!lo.feasible || !hi.feasible)
        throw std::invalid_argument("DetectionSpec: empty nuisance set");
      if (std::fabs(lo.value + hi.value) > 1e-7)
        throw std::invalid_argument("DetectionSpec: Gaussian case needs a symmetric nuisance set");
    }
  } else {
    if (A.minCoeff() < 0.0) throw std::invalid_argument("DetectionSpec: Poisson case needs A >= 0");
    for (int r = 0; r < A.rows(); ++r)
      if (A.row(r).maxCoeff() <= 0.0)
        throw std::invalid_argument("DetectionSpec: Poisson case forbids zero rows of A");
    SetCheck ck = check_set(nuisance, DomainTag::positive_orthant(1e-12));
    if (ck.status != SetCheckStatus::Ok)
      throw std::invalid_argument("DetectionSpec: Poisson nuisance must sit inside the positive orthant");
  }
}

double SensorTest::eval(const Vec& omega) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& d : parts) {
    double v = d.eval(omega);
    if (which == SensorCase::Gaussian) v = std::min(v, -d.xi.dot(omega) - d.alpha);
    best = std::min(best, v);
  }
  return best + log_shift;
}

namespace {

// min over u,v in V of ||A(u - r e - v)||_2, plus the minimizers.
double gaussian_separation(const DetectionSpec& spec, const Vec& e, double r,
                           const FWConfig& cfg, Vec* u_out, Vec* v_out) {
  Vec offset = spec.A * (r * e);
  Objective f = [&](const Vec& z, Vec* g) {
    int n = spec.nuisance.dim;
    Vec d = spec.A * (z.head(n) - z.tail(n)) - offset;
    if (g) {
      Vec back = spec.A.transpose() * d;
      g->resize(2 * n);
      g->head(n) = -2.0 * back;
      g->tail(n) = 2.0 * back;
    }
    return -d.squaredNorm();
  };
  OptResult res = maximize_concave(f, {&spec.nuisance, &spec.nuisance}, cfg);
  if (u_out) *u_out = res.point.head(spec.nuisance.dim);
  if (v_out) *v_out = res.point.tail(spec.nuisance.dim);
  return std::sqrt(std::max(0.0, -res.value));
}

// min over u,v in V of h^2(Au, A(re + v)) = 1/2 sum (sqrt - sqrt)^2.
double poisson_separation(const DetectionSpec& spec, const Vec& e, double r,
                          const FWConfig& cfg, Vec* u_out, Vec* v_out) {
  Vec offset = spec.A * (r * e);
  Objective f = [&](const Vec& z, Vec* g) {
    int n = spec.nuisance.dim;
    Vec a = spec.A * z.head(n);
    Vec b = offset + spec.A * z.tail(n);
    double h2 = 0.0;
    Vec da(a.size()), db(b.size());
    for (int l = 0; l < a.size(); ++l) {
      double sa = std::sqrt(std::max(a[l], 0.0)), sb = std::sqrt(std::max(b[l], 0.0));
      h2 += 0.5 * (sa - sb) * (sa - sb);
      if (g) {
        da[l] = (sa > 0.0) ? -(0.5 * (sa - sb) / sa) : 0.0;
        db[l] = (sb > 0.0) ? -(0.5 * (sb - sa) / sb) : 0.0;
      }
    }
    if (g) {
      g->resize(2 * n);
      g->head(n) = spec.A.transpose() * da;
      g->tail(n) = spec.A.transpose() * db;
    }
    return -h2;
  };
  OptResult res = maximize_concave(f, {&spec.nuisance, &spec.nuisance}, cfg);
  if (u_out) *u_out = res.point.head(spec.nuisance.dim);
  if (v_out) *v_out = res.point.tail(spec.nuisance.dim);
  return std::max(0.0, -res.value);
}

}  // namespace

double rate_factor(double eps, int n, RateFormula which) {
  if (!(eps > 0.0 && eps < 0.25)) throw std::domain_error("rate_factor: eps outside (0,1/4)");
  switch (which) {
    case RateFormula::Poisson:
      return std::log(n / (eps * eps)) / std::log(1.0 / (4.0 * eps));
    case RateFormula::Gaussian:
      return gaussian_tail_inv(eps / (4.0 * n)) / (2.0 * gaussian_tail_inv(eps / 2.0)) + 0.5;
    case RateFormula::Functional:
      return 2.0 * std::log(1.0 / eps) / std::log(1.0 / (4.0 * eps));
  }
  return 0.0;
}

SensorProfile sensor_rate_profile(const DetectionSpec& spec, SensorCase which,
                                  const FWConfig& cfg) {
  spec.validate(which);
  const int n = static_cast<int>(spec.signatures.size());
  const double R = spec.amplitude_cap;

  double threshold, baseline_threshold;
  if (which == SensorCase::Gaussian) {
    threshold = spec.sigma * (gaussian_tail_inv(spec.eps / (4.0 * n)) +
                              gaussian_tail_inv(spec.eps / 2.0));
    baseline_threshold = 2.0 * spec.sigma * gaussian_tail_inv(spec.eps / 2.0);
  } else {
    threshold = std::log(std::sqrt(static_cast<double>(n)) / spec.eps);
    baseline_threshold = 0.5 * std::log(1.0 / (4.0 * spec.eps));
  }

  SensorProfile out;
  out.rho.resize(n);
  out.rho_star.resize(n);
  out.test.which = which;
  out.test.log_shift = (which == SensorCase::Poisson)
                           ? 0.5 * std::log(static_cast<double>(n))
                           : 0.0;
  out.kappa = rate_factor(spec.eps, n,
                          which == SensorCase::Gaussian ? RateFormula::Gaussian
                                                        : RateFormula::Poisson);

  const double tol = 1e-5 * R;
  for (int i = 0; i < n; ++i) {
    const Vec& e = spec.signatures[i];
    auto separation = [&](double r, Vec* u, Vec* v) {
      return (which == SensorCase::Gaussian) ? gaussian_separation(spec, e, r, cfg, u, v)
                                             : poisson_separation(spec, e, r, cfg, u, v);
    };
    auto feasible_at = [&](double T) {
      return [&, T](double r) { return separation(r, nullptr, nullptr) <= T; };
    };
    // rho_i: largest amplitude still below the detection threshold.
    if (separation(R, nullptr, nullptr) <= threshold) {
      out.rho[i] = kRhoInfeasible;
    } else {
      out.rho[i] = bisect_max_param(feasible_at(threshold), 0.0, R, tol);
    }
    if (separation(R, nullptr, nullptr) <= baseline_threshold) {
      out.rho_star[i] = kRhoInfeasible;
    } else {
      out.rho_star[i] = bisect_max_param(feasible_at(baseline_threshold), 0.0, R, tol);
    }

    // Detector at the optimizing (u, v, r = rho_i); fall back to R when the
    // threshold is unreachable.
    double r_det = std::isfinite(out.rho[i]) ? out.rho[i] : R;
    Vec u, v;
    separation(r_det, &u, &v);
    AffineDetector det;
    Vec diff = spec.A * (u - r_det * e - v);
    if (which == SensorCase::Gaussian) {
      double lam = gaussian_tail_inv(spec.eps / 2.0) /
                   (gaussian_tail_inv(spec.eps / (4.0 * n)) +
                    gaussian_tail_inv(spec.eps / 2.0));
      det.xi = diff;
      det.alpha = lam * diff.dot(spec.A * (u + r_det * e + v));
    } else {
      Vec au = spec.A * u;
      Vec av = spec.A * (r_det * e + v);
      det.xi.resize(au.size());
      for (int l = 0; l < au.size(); ++l)
        det.xi[l] = 0.5 * std::log(std::max(au[l], 1e-300) / std::max(av[l], 1e-300));
      det.alpha = 0.5 * (au.sum() - av.sum());
    }
    out.test.parts.push_back(det);
  }
  return out;
}

}  // namespace convtest
