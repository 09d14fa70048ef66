#include "convtest/pairtest.hpp"

#include <cmath>

#include "convtest/normal.hpp"

namespace convtest {

namespace {

std::vector<DomainTag> default_tags(const ProductScheme& scheme) {
  std::vector<DomainTag> tags;
  for (const auto& f : scheme.factors) {
    switch (f.kind) {
      case FactorKind::Gaussian:
        tags.push_back(DomainTag::unrestricted());
        break;
      case FactorKind::Poisson:
        tags.push_back(DomainTag::positive_orthant(1e-9));
        break;
      case FactorKind::Discrete:
        tags.push_back(DomainTag::simplex_interior(1e-9));
        break;
    }
  }
  return tags;
}

// Objective sum_k repeat_k psi_k over the concatenated raw variables of the
// two bodies.
struct PairObjective {
  const ProductScheme* scheme;
  const ConvexBody* X;
  const ConvexBody* Y;

  double operator()(const Vec& z, Vec* grad) const {
    int nx = X->raw_dim();
    int ny = Y->raw_dim();
    Vec x = X->to_ambient(z.head(nx));
    Vec y = Y->to_ambient(z.tail(ny));
    double val = 0.0;
    Vec gx, gy;
    if (grad) {
      gx = Vec::Zero(x.size());
      gy = Vec::Zero(y.size());
    }
    int off = 0;
    for (const auto& f : scheme->factors) {
      PsiValue pv = psi_eval(f, x.segment(off, f.dim), y.segment(off, f.dim), grad != nullptr);
      val += f.repeat * pv.value;
      if (grad) {
        gx.segment(off, f.dim) = f.repeat * pv.grad_x;
        gy.segment(off, f.dim) = f.repeat * pv.grad_y;
      }
      off += f.dim;
    }
    if (grad) {
      grad->resize(nx + ny);
      grad->head(nx) = X->pull_gradient(gx);
      grad->tail(ny) = Y->pull_gradient(gy);
    }
    return val;
  }
};

}  // namespace

void PairProblem::validate() const {
  scheme.validate();
  ProductScheme exp = scheme.expanded();
  if (X.ambient_dim() != exp.param_dim() || Y.ambient_dim() != exp.param_dim())
    throw std::invalid_argument("PairProblem: set dimension does not match the scheme");
  if (!tags.empty() && tags.size() != exp.factors.size())
    throw std::invalid_argument("PairProblem: one tag per expanded factor expected");
}

PairSolution solve_pair(const PairProblem& p, const FWConfig& cfg) {
  p.validate();
  ProductScheme scheme = p.scheme.expanded();
  std::vector<DomainTag> tags = p.tags.empty() ? default_tags(scheme) : p.tags;

  // Margin checks protect the psi/log evaluations downstream.  Lifted bodies
  // are checked on their raw polytope for emptiness only (the margin lives
  // in ambient coordinates and is enforced by the model builders).
  for (const ConvexBody* body : {&p.X, &p.Y}) {
    if (check_set(body->poly, DomainTag::unrestricted()).status == SetCheckStatus::Empty)
      throw EmptySetError("hypothesis set is empty");
    if (body->map) continue;
    int off = 0;
    for (size_t k = 0; k < scheme.factors.size(); ++k) {
      const auto& f = scheme.factors[k];
      if (tags[k].kind != DomainKind::Unrestricted) {
        for (int i = 0; i < f.dim; ++i) {
          Vec ci = Vec::Zero(body->poly.dim);
          ci[off + i] = 1.0;
          if (tags[k].kind == DomainKind::PositiveOrthant) {
            LpResult lo = lp_minimize(ci, body->poly);
            if (lo.feasible && lo.value < tags[k].margin - 1e-12)
              throw EmptySetError("hypothesis set violates the domain margin");
          } else {
            LpResult hi = lp_minimize(Vec(-ci), body->poly);
            if (hi.feasible && -hi.value < tags[k].margin - 1e-12)
              throw EmptySetError("hypothesis set violates the domain margin");
          }
        }
      }
      off += f.dim;
    }
  }

  // The objective runs on the unexpanded scheme: psi sums over coordinates,
  // so splitting Poisson factors changes nothing there (the expansion only
  // matters for detector and observation layout).
  PairObjective obj{&p.scheme, &p.X, &p.Y};
  Objective fobj(obj);
  // 1-D restrictions reuse the lifted points: the output maps are linear,
  // so ambient(x + g d) = ambient(x) + g ambient(d).  Written without
  // per-factor temporaries; this is the line-search hot path.
  fobj.line = [&p](const Vec& z, const Vec& d) {
    int nx = p.X.raw_dim(), ny = p.Y.raw_dim();
    Vec ax = p.X.to_ambient(z.head(nx)), dx = p.X.to_ambient(d.head(nx));
    Vec ay = p.Y.to_ambient(z.tail(ny)), dy = p.Y.to_ambient(d.tail(ny));
    const ProductScheme* sch = &p.scheme;
    return [sch, ax = std::move(ax), dx = std::move(dx), ay = std::move(ay),
            dy = std::move(dy)](double g) {
      double val = 0.0;
      int off = 0;
      for (const auto& f : sch->factors) {
        switch (f.kind) {
          case FactorKind::Gaussian: {
            Vec diff = (ax.segment(off, f.dim) - ay.segment(off, f.dim)) +
                       g * (dx.segment(off, f.dim) - dy.segment(off, f.dim));
            val += f.repeat * (-0.25 * diff.dot(f.chol.solve(diff)));
            break;
          }
          case FactorKind::Poisson: {
            double s = 0.0;
            for (int i = 0; i < f.dim; ++i) {
              double xv = ax[off + i] + g * dx[off + i];
              double yv = ay[off + i] + g * dy[off + i];
              double df = std::sqrt(std::max(xv, 0.0)) - std::sqrt(std::max(yv, 0.0));
              s -= df * df;
            }
            val += f.repeat * s;
            break;
          }
          case FactorKind::Discrete: {
            double rho = 0.0;
            for (int i = 0; i < f.dim; ++i) {
              double xv = std::max(ax[off + i] + g * dx[off + i], 0.0);
              double yv = std::max(ay[off + i] + g * dy[off + i], 0.0);
              rho += std::sqrt(xv * yv);
            }
            val += f.repeat * 2.0 * std::log(std::max(rho, 1e-300));
            break;
          }
        }
        off += f.dim;
      }
      return val;
    };
  };
  OptResult r = maximize_concave(fobj, {&p.X.poly, &p.Y.poly}, cfg);

  PairSolution s;
  s.scheme = scheme;
  s.x_raw = r.point.head(p.X.raw_dim());
  s.y_raw = r.point.tail(p.Y.raw_dim());
  s.x_star = p.X.to_ambient(s.x_raw);
  s.y_star = p.Y.to_ambient(s.y_raw);
  s.opt = r.value;
  s.eps_star = std::exp(0.5 * r.value);
  s.gap = 2.0 * r.gap;
  s.iters = r.iters;
  s.converged = r.converged;
  s.trivial_overlap = (s.eps_star >= 1.0 - 1e-8);
  s.detector = build_product_detector(scheme, s.x_star, s.y_star);
  s.certified_eps = certified_risk(s);
  s.risk_x_bound = s.eps_star;
  s.risk_y_bound = s.eps_star;
  return s;
}

PairSolution shift_detector(const PairSolution& s, double a) {
  PairSolution out = s;
  out.detector.shift = a;
  out.risk_x_bound = std::exp(a) * s.eps_star;
  out.risk_y_bound = std::exp(-a) * s.eps_star;
  return out;
}

PairVerdict decide(const PairSolution& s, const Vec& obs) {
  return (s.detector.eval(obs) >= 0.0) ? PairVerdict::AcceptX : PairVerdict::AcceptY;
}

std::optional<long long> repeated_plan(double eps_star, double eps_target) {
  if (!(eps_star > 0.0) || !(eps_target > 0.0) || eps_target >= 1.0)
    throw std::invalid_argument("repeated_plan: need eps_star > 0 and eps_target in (0,1)");
  if (eps_star >= 1.0) return std::nullopt;  // no finite plan
  double k = std::log(eps_target) / std::log(eps_star);
  long long K = std::max<long long>(1, static_cast<long long>(std::ceil(k - 1e-12)));
  while (std::pow(eps_star, static_cast<double>(K)) > eps_target) ++K;
  while (K > 1 && std::pow(eps_star, static_cast<double>(K - 1)) <= eps_target) --K;
  return K;
}

long long near_opt_sample_size(double eps, long long kbar) {
  if (!(eps > 0.0 && eps < 0.25)) throw std::domain_error("near_opt_sample_size: eps outside (0,1/4)");
  if (kbar < 1) throw std::invalid_argument("near_opt_sample_size: kbar must be >= 1");
  double denom = 1.0 - 2.0 * std::log(2.0) / std::log(1.0 / eps);
  double v = 2.0 * static_cast<double>(kbar) / denom;
  long long K = static_cast<long long>(std::ceil(v - 1e-9));
  if (static_cast<double>(K) < v - 1e-9) ++K;
  return K;
}

double certified_risk(const PairSolution& s) {
  bool all_gauss = true, all_poisson = true, all_discrete = true;
  for (const auto& f : s.scheme.factors) {
    all_gauss &= (f.kind == FactorKind::Gaussian);
    all_poisson &= (f.kind == FactorKind::Poisson);
    all_discrete &= (f.kind == FactorKind::Discrete);
  }
  double delta = s.gap;
  if (all_gauss) {
    // d^2 = sum_k K_k (x-y)' Sigma_k^{-1} (x-y) = -4 opt; bound
    // Erf(d/2 - delta/d) sharpens the generic product bound.
    double d2 = -4.0 * s.opt;
    if (d2 <= 0.0) return 1.0;
    double d = std::sqrt(d2);
    return std::min(1.0, gaussian_tail(0.5 * d - delta / d));
  }
  if (all_poisson) {
    // risk <= exp(-h^2 + delta) with h^2 = -opt/2 ... opt = -2 h^2.
    return std::min(1.0, std::exp(0.5 * s.opt + delta));
  }
  if (all_discrete && s.scheme.factors.size() == 1 && s.scheme.factors[0].repeat == 1) {
    return std::min(1.0, s.eps_star + delta);
  }
  return std::min(1.0, std::exp(0.5 * delta) * s.eps_star);
}

}  // namespace convtest
