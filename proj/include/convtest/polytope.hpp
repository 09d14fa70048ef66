#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "convtest/linalg.hpp"

namespace convtest {

// Compact polyhedral set {x : lower <= x <= upper, a'x <= b, c'x = d}.
// Box bounds are mandatory and finite, so every instance is compact.
// Immutable once handed to a solver; safe to share across threads.
struct PolytopeSpec {
  int dim = 0;
  Vec lower, upper;
  std::vector<std::pair<Vec, double>> ineq;  // a'x <= b
  std::vector<std::pair<Vec, double>> eq;    // c'x = d

  static PolytopeSpec box(const Vec& lo, const Vec& up);
  static PolytopeSpec simplex(int m);               // standard simplex
  static PolytopeSpec singleton(const Vec& point);

  PolytopeSpec& add_ineq(const Vec& a, double b);
  PolytopeSpec& add_eq(const Vec& c, double d);
  void validate() const;  // throws std::invalid_argument on malformed data
};

enum class DomainKind { Unrestricted, PositiveOrthant, SimplexInterior };

struct DomainTag {
  DomainKind kind = DomainKind::Unrestricted;
  double margin = 0.0;  // > 0 for the restricted kinds

  static DomainTag unrestricted() { return {DomainKind::Unrestricted, 0.0}; }
  static DomainTag positive_orthant(double m) { return {DomainKind::PositiveOrthant, m}; }
  static DomainTag simplex_interior(double m) { return {DomainKind::SimplexInterior, m}; }
};

struct LpResult {
  bool feasible = false;
  Vec x;
  double value = 0.0;
};

// Warm-start cache bound to a single PolytopeSpec; reusing it across calls
// with the same set makes repeated oracle calls (Frank-Wolfe) cheap.
class LpWorkspace {
 public:
  LpWorkspace() = default;
  void reset();

 private:
  friend LpResult lp_minimize(const Vec&, const PolytopeSpec&, LpWorkspace*);
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Minimizes c'x over S.  Feasibility tolerance 1e-9 absolute; deterministic
// vertex selection (lowest-index tie-breaking inside the simplex method).
LpResult lp_minimize(const Vec& c, const PolytopeSpec& S, LpWorkspace* ws = nullptr);

enum class SetCheckStatus { Ok, Empty, MarginViolated };

struct SetCheck {
  SetCheckStatus status = SetCheckStatus::Ok;
  int coord = -1;       // violating coordinate (0-based) when margin-violated
  double attained = 0;  // the offending minimal value
};

// Verifies S is nonempty and respects the domain tag via per-coordinate LPs.
SetCheck check_set(const PolytopeSpec& S, const DomainTag& tag);

// A polytope optionally composed with a linear output map: the represented
// set is {map * w : w in poly}.  Used for lifted constructions where the
// LP oracle runs on the lifted variables directly.
struct ConvexBody {
  PolytopeSpec poly;
  std::optional<Mat> map;

  int raw_dim() const { return poly.dim; }
  int ambient_dim() const { return map ? static_cast<int>(map->rows()) : poly.dim; }
  Vec to_ambient(const Vec& w) const { return map ? Vec(*map * w) : w; }
  Vec pull_gradient(const Vec& g) const { return map ? Vec(map->transpose() * g) : g; }
};

}  // namespace convtest
