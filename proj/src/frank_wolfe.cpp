#include "convtest/frank_wolfe.hpp"

#include <cmath>
#include <limits>

namespace convtest {

namespace {

double checked_eval(const Objective& f, const Vec& x, Vec* grad) {
  double v = f.eval(x, grad);
  if (!std::isfinite(v) || (grad && !grad->allFinite()))
    throw NonfiniteObjectiveError("objective or gradient is not finite on the feasible set");
  return v;
}

// Golden-section maximization of phi on [0, hi]; phi is concave.
double golden_max(const std::function<double(double)>& phi, double hi) {
  const double inv_phi = 0.6180339887498949;
  double a = 0.0, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = phi(x1), f2 = phi(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, hi); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = phi(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = phi(x1);
    }
  }
  // Endpoints are candidates too (concavity can push the max to a boundary).
  double mid = 0.5 * (a + b);
  double fm = phi(mid);
  double f0 = phi(0.0), fh = phi(hi);
  if (f0 >= fm && f0 >= fh) return 0.0;
  if (fh >= fm) return hi;
  return mid;
}

struct ActiveSet {
  std::vector<Vec> verts;
  std::vector<double> weight;

  int find(const Vec& v) const {
    for (size_t i = 0; i < verts.size(); ++i) {
      double scale = 1.0 + verts[i].cwiseAbs().maxCoeff();
      if ((verts[i] - v).cwiseAbs().maxCoeff() <= 1e-11 * scale)
        return static_cast<int>(i);
    }
    return -1;
  }

  void drop(int i) {
    verts[i] = std::move(verts.back());
    verts.pop_back();
    weight[i] = weight.back();
    weight.pop_back();
  }

  Vec combination() const {
    Vec x = Vec::Zero(verts.empty() ? 0 : verts[0].size());
    for (size_t i = 0; i < verts.size(); ++i) x += weight[i] * verts[i];
    return x;
  }
};

}  // namespace

OptResult maximize_concave(const Objective& f,
                           const std::vector<const PolytopeSpec*>& factors,
                           const FWConfig& cfg) {
  if (factors.empty()) throw std::invalid_argument("maximize_concave: no factors");
  if (!(cfg.gap_tol > 0.0) || cfg.max_iters < 1)
    throw std::invalid_argument("maximize_concave: bad config");

  std::vector<int> offset(factors.size() + 1, 0);
  for (size_t k = 0; k < factors.size(); ++k)
    offset[k + 1] = offset[k] + factors[k]->dim;
  const int dim = offset.back();

  std::vector<LpWorkspace> ws(factors.size());
  auto oracle = [&](const Vec& grad) {
    Vec s(dim);
    for (size_t k = 0; k < factors.size(); ++k) {
      Vec ck = -grad.segment(offset[k], factors[k]->dim);
      LpResult r = lp_minimize(ck, *factors[k], &ws[k]);
      if (!r.feasible) throw std::runtime_error("maximize_concave: empty factor set");
      s.segment(offset[k], factors[k]->dim) = r.x;
    }
    return s;
  };

  ActiveSet act;
  {
    Vec start = oracle(Vec::Ones(dim) * -1.0);  // min sum(x): a deterministic vertex
    act.verts.push_back(start);
    act.weight.push_back(1.0);
  }
  Vec x = act.verts[0];
  Vec grad(dim);
  double value = checked_eval(f, x, &grad);

  OptResult out;
  long long it = 0;
  for (; it < cfg.max_iters; ++it) {
    Vec s = oracle(grad);
    double fw_gap = grad.dot(s - x);
    if (fw_gap <= cfg.gap_tol) {
      out.converged = true;
      break;
    }

    // Away candidate: active vertex with the smallest gradient inner product.
    int away = -1;
    double away_score = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < act.verts.size(); ++i) {
      double sc = grad.dot(act.verts[i]);
      if (sc < away_score) {
        away_score = sc;
        away = static_cast<int>(i);
      }
    }
    double away_gap = grad.dot(x) - away_score;

    bool use_away = false;
    double gmax = 1.0;
    Vec dir;
    if (away >= 0 && away_gap > fw_gap && act.weight[away] < 1.0 - 1e-12) {
      use_away = true;
      dir = x - act.verts[away];
      gmax = act.weight[away] / (1.0 - act.weight[away]);
    } else {
      dir = s - x;
      gmax = 1.0;
    }

    double gamma;
    if (cfg.line_search) {
      if (f.line) {
        auto phi = f.line(x, dir);
        gamma = golden_max([&](double g) {
          double v = phi(g);
          if (!std::isfinite(v))
            throw NonfiniteObjectiveError("objective is not finite on the feasible set");
          return v;
        }, gmax);
      } else {
        auto phi = [&](double g) { return checked_eval(f, x + g * dir, nullptr); };
        gamma = golden_max(phi, gmax);
      }
    } else {
      gamma = std::min(2.0 / static_cast<double>(it + 2), gmax);
    }
    if (gamma <= 0.0 && cfg.line_search) {
      // Golden section can miss steps below its resolution when the
      // curvature along the direction is extreme; probe a geometric ladder
      // before giving up.
      auto probe = f.line ? f.line(x, dir)
                          : std::function<double(double)>([&](double g) {
                              return checked_eval(f, x + g * dir, nullptr);
                            });
      double f0 = probe(0.0);
      double best_g = 0.0, best_v = f0;
      for (double g = gmax; g > 1e-15 * gmax; g *= 0.25) {
        double v = probe(g);
        if (v > best_v) {
          best_v = v;
          best_g = g;
        }
      }
      if (best_v > f0 + 1e-13 * (1.0 + std::fabs(f0))) gamma = best_g;
    }
    if (gamma <= 0.0) {
      // No measurable ascent along the chosen direction: the remaining gap
      // is below line-search granularity.
      break;
    }

    if (use_away) {
      for (auto& w : act.weight) w *= (1.0 + gamma);
      act.weight[away] -= gamma;
      if (act.weight[away] <= 1e-14) act.drop(away);
    } else {
      if (gamma >= 1.0 - 1e-14) {
        act.verts.assign(1, s);
        act.weight.assign(1, 1.0);
      } else {
        for (auto& w : act.weight) w *= (1.0 - gamma);
        int pos = act.find(s);
        if (pos >= 0)
          act.weight[pos] += gamma;
        else {
          act.verts.push_back(s);
          act.weight.push_back(gamma);
        }
      }
    }
    x += gamma * dir;
    if ((it & 63) == 63) {
      double tot = 0.0;
      for (double w : act.weight) tot += w;
      for (auto& w : act.weight) w /= tot;
      x = act.combination();
    }
    value = checked_eval(f, x, &grad);
  }

  // Certify the returned iterate with a fresh gap evaluation.
  value = checked_eval(f, x, &grad);
  Vec s = oracle(grad);
  out.gap = std::max(0.0, grad.dot(s - x));
  out.point = x;
  out.value = value;
  out.iters = it;
  if (out.gap <= cfg.gap_tol) out.converged = true;
  return out;
}

}  // namespace convtest
