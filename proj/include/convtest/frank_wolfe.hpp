#pragma once

#include <functional>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "convtest/polytope.hpp"

namespace convtest {

struct NonfiniteObjectiveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FWConfig {
  long long max_iters = 200000;
  double gap_tol = 1e-7;
  bool line_search = true;  // exact 1-D maximization by golden section
};

struct OptResult {
  Vec point;          // concatenated factor variables
  double value = 0.0;
  double gap = 0.0;   // certified first-order residual max_z grad'(z-x)
  long long iters = 0;
  bool converged = false;
};

// eval(x, grad) returns the objective value and, when grad != nullptr,
// fills the gradient; must be finite on the feasible product set.  The
// optional line factory returns phi(gamma) = f(x + gamma d) so objectives
// composed with linear lifts can cache the lifted point and direction
// instead of re-applying the map on every line-search probe.
struct Objective {
  std::function<double(const Vec&, Vec*)> eval;
  std::function<std::function<double(double)>(const Vec&, const Vec&)> line;

  Objective() = default;
  Objective(std::function<double(const Vec&, Vec*)> e) : eval(std::move(e)) {}
  template <typename F, typename = std::enable_if_t<std::is_invocable_r_v<double, F, const Vec&, Vec*>>>
  Objective(F&& f) : eval(std::forward<F>(f)) {}
};

// Maximizes a smooth concave f over a product of polytopes by Frank-Wolfe
// with away steps.  The LP oracle is lp_minimize per factor with a
// warm-started workspace.  Throws NonfiniteObjectiveError if f or its
// gradient evaluates to NaN/Inf on a feasible point.
OptResult maximize_concave(const Objective& f,
                           const std::vector<const PolytopeSpec*>& factors,
                           const FWConfig& cfg = {});

inline OptResult maximize_concave(const Objective& f, const PolytopeSpec& S,
                                  const FWConfig& cfg = {}) {
  return maximize_concave(f, std::vector<const PolytopeSpec*>{&S}, cfg);
}

}  // namespace convtest
