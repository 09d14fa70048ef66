#include "convtest/markov.hpp"

#include <cmath>
#include <stdexcept>

#include "convtest/solver_kernels.hpp"

namespace convtest {

QueueChain queueing_chain(double lambda, double mu, int s, int b) {
  if (!(lambda > 0.0) || !(mu > 0.0)) throw std::invalid_argument("queueing_chain: rates must be positive");
  if (s < 0 || b < 0) throw std::invalid_argument("queueing_chain: negative s or b");
  QueueChain q;
  q.n = s + b + 1;
  q.L = Mat::Zero(q.n, q.n);
  for (int j = 1; j <= q.n; ++j) {
    double up = (j >= 2) ? std::min(j - 1, s) * mu : 0.0;   // service: j -> j-1
    double dn = (j <= q.n - 1) ? lambda : 0.0;              // arrival: j -> j+1
    if (j >= 2) q.L(j - 2, j - 1) = up;
    if (j <= q.n - 1) q.L(j, j - 1) = dn;
    q.L(j - 1, j - 1) = -(up + dn);
  }
  q.S = expm(q.L);
  return q;
}

MarkovPairPlan markov_pair_plan(const Mat& S1, const Mat& S2, const PolytopeSpec& X,
                                double eps_target, int k_cap) {
  const int n = static_cast<int>(S1.rows());
  if (S1.cols() != n || S2.rows() != n || S2.cols() != n)
    throw std::invalid_argument("markov_pair_plan: shape mismatch");
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (!(S1(i, j) > 0.0) || !(S2(i, j) > 0.0))
        throw std::invalid_argument("markov_pair_plan: transition entries must be positive");
  if (X.dim != n) throw std::invalid_argument("markov_pair_plan: X dimension mismatch");

  MarkovPairPlan plan;
  plan.detector.resize(n, n);
  Mat M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      M(i, j) = std::sqrt(S1(i, j) * S2(i, j));
      plan.detector(i, j) = 0.5 * std::log(S1(i, j) / S2(i, j));
    }

  Eigen::RowVectorXd u = Eigen::RowVectorXd::Ones(n);
  for (int K = 1; K <= k_cap; ++K) {
    u = u * M;  // u = 1' M^K
    LpResult r = lp_minimize(Vec(-u.transpose()), X);
    if (!r.feasible) throw std::invalid_argument("markov_pair_plan: X is empty");
    double eps = -r.value;
    plan.eps_curve.push_back(eps);
    if (eps <= eps_target) {
      plan.k_min = K;
      break;
    }
    // stop early once the curve flattens at 1 (identical chains)
    if (K > 64 && eps > 1.0 - 1e-13) break;
  }
  return plan;
}

void MarkovSpec::validate() const {
  const int n = static_cast<int>(nominal.rows());
  if (nominal.cols() != n || n < 1) throw std::invalid_argument("MarkovSpec: nominal must be square");
  for (int j = 0; j < n; ++j) {
    if (std::fabs(nominal.col(j).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("MarkovSpec: nominal columns must sum to one");
    if (nominal.col(j).minCoeff() < 0.0)
      throw std::invalid_argument("MarkovSpec: negative transition probability");
  }
  if (!(rho >= 0.0) || rho >= 2.0) throw std::invalid_argument("MarkovSpec: rho outside [0,2)");
  if (kappa < 1) throw std::invalid_argument("MarkovSpec: kappa must be >= 1");
  if (variant == MarkovUncertainty::NormBall && kappa * rho >= 2.0)
    throw std::invalid_argument("MarkovSpec: kappa*rho must stay below 2");
  int expected_cols = (variant == MarkovUncertainty::TransitionCones) ? n * n : n;
  if (channel.cols() != expected_cols)
    throw std::invalid_argument("MarkovSpec: channel column count mismatch");
  for (int j = 0; j < channel.cols(); ++j) {
    if (std::fabs(channel.col(j).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("MarkovSpec: channel columns must sum to one");
    if (!(channel.col(j).minCoeff() > 0.0))
      throw std::invalid_argument("MarkovSpec: channel entries must be positive (floor first)");
  }
}

namespace {

// Z for interval transition cones: lifted variables are the n^2 entries of
// the transition-pair distribution P (column j holds the mass of source
// state j), with (1-rho) c_ij a_j <= P_ij <= (1+rho) c_ij a_j for the
// column sums a_j and total mass one.  z = channel * vec(P).
ConvexBody cones_body(const MarkovSpec& spec) {
  const int n = static_cast<int>(spec.nominal.rows());
  const int N = n * n;
  PolytopeSpec poly;
  poly.dim = N;
  poly.lower = Vec::Zero(N);
  poly.upper = Vec::Ones(N);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int p = j * n + i;
      double c = spec.nominal(i, j);
      if (c <= 0.0) {
        poly.upper[p] = 0.0;  // structural zero stays zero
        continue;
      }
      // P_ij - (1+rho) c a_j <= 0 and (1-rho) c a_j - P_ij <= 0
      Vec hi = Vec::Zero(N), lo = Vec::Zero(N);
      for (int k = 0; k < n; ++k) {
        hi[j * n + k] -= (1.0 + spec.rho) * c;
        lo[j * n + k] += (1.0 - spec.rho) * c;
      }
      hi[p] += 1.0;
      lo[p] -= 1.0;
      poly.add_ineq(hi, 0.0);
      if (spec.rho < 1.0) poly.add_ineq(lo, 0.0);
    }
  poly.add_eq(Vec::Ones(N), 1.0);
  ConvexBody body;
  body.poly = std::move(poly);
  body.map = spec.channel;
  return body;
}

// Z for the ||.||_{1,1} ball around Q, observed through an m x n channel
// every kappa steps.  rho = 0 collapses to the convex hull of the columns
// of channel * Q^kappa; otherwise lifted variables (alpha, v^j, t^j) encode
// z = channel * sum_j v^j with ||v^j - alpha_j Col_j[Q^kappa]||_1 <=
// alpha_j kappa rho.
ConvexBody norm_ball_body(const MarkovSpec& spec) {
  const int n = static_cast<int>(spec.nominal.rows());
  Mat Qk = Mat::Identity(n, n);
  for (int t = 0; t < spec.kappa; ++t) Qk = spec.nominal * Qk;

  ConvexBody body;
  if (spec.rho == 0.0) {
    body.poly = PolytopeSpec::simplex(n);
    body.map = Mat(spec.channel * Qk);
    return body;
  }

  const double radius = spec.kappa * spec.rho;
  // layout: alpha (n) | v (n^2, column-major v^j) | t (n^2)
  const int N = n + 2 * n * n;
  auto vidx = [n](int j, int i) { return n + j * n + i; };
  auto tidx = [n](int j, int i) { return n + n * n + j * n + i; };
  PolytopeSpec poly;
  poly.dim = N;
  poly.lower = Vec::Zero(N);
  poly.upper = Vec::Ones(N);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) poly.upper[tidx(j, i)] = 2.0;
  // alpha in the simplex
  {
    Vec sum = Vec::Zero(N);
    sum.head(n).setOnes();
    poly.add_eq(sum, 1.0);
  }
  for (int j = 0; j < n; ++j) {
    // sum_i v^j_i = alpha_j
    Vec row = Vec::Zero(N);
    for (int i = 0; i < n; ++i) row[vidx(j, i)] = 1.0;
    row[j] = -1.0;
    poly.add_eq(row, 0.0);
    // |v^j_i - alpha_j Qk_ij| <= t^j_i
    for (int i = 0; i < n; ++i) {
      Vec up = Vec::Zero(N), dn = Vec::Zero(N);
      up[vidx(j, i)] = 1.0;
      up[j] = -Qk(i, j);
      up[tidx(j, i)] = -1.0;
      poly.add_ineq(up, 0.0);
      dn[vidx(j, i)] = -1.0;
      dn[j] = Qk(i, j);
      dn[tidx(j, i)] = -1.0;
      poly.add_ineq(dn, 0.0);
    }
    // sum_i t^j_i <= alpha_j * radius
    Vec cap = Vec::Zero(N);
    for (int i = 0; i < n; ++i) cap[tidx(j, i)] = 1.0;
    cap[j] = -radius;
    poly.add_ineq(cap, 0.0);
  }
  const int m = static_cast<int>(spec.channel.rows());
  Mat map = Mat::Zero(m, N);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) map.col(vidx(j, i)) = spec.channel.col(i);
  body.poly = std::move(poly);
  body.map = std::move(map);
  return body;
}

}  // namespace

ConvexBody markov_Z_sets(const MarkovSpec& spec) {
  spec.validate();
  ConvexBody body = (spec.variant == MarkovUncertainty::TransitionCones)
                        ? cones_body(spec)
                        : norm_ball_body(spec);
  // reject inconsistent radius/cone data up front
  if (check_set(body.poly, DomainTag::unrestricted()).status == SetCheckStatus::Empty)
    throw std::runtime_error("markov_Z_sets: empty observation set");
  return body;
}

Mat transition_identity_channel(int n) { return Mat::Identity(n * n, n * n); }

Mat transition_pair_channel(const Mat& state_channel) {
  const int m = static_cast<int>(state_channel.rows());
  const int n = static_cast<int>(state_channel.cols());
  Mat A = Mat::Zero(m * m, n * n);
  for (int j = 0; j < n; ++j)        // source state
    for (int i = 0; i < n; ++i)      // destination state
      for (int bs = 0; bs < m; ++bs)
        for (int bd = 0; bd < m; ++bd)
          A(bs * m + bd, j * n + i) = state_channel(bs, j) * state_channel(bd, i);
  return A;
}

Mat bin_channel(const std::vector<std::vector<int>>& bins, int n) {
  const int m = static_cast<int>(bins.size());
  Mat C = Mat::Zero(m, n);
  std::vector<int> seen(n, 0);
  for (int b = 0; b < m; ++b)
    for (int s : bins[b]) {
      if (s < 1 || s > n || seen[s - 1]++)
        throw std::invalid_argument("bin_channel: bins must partition 1..n");
      C(b, s - 1) = 1.0;
    }
  for (int s = 0; s < n; ++s)
    if (!seen[s]) throw std::invalid_argument("bin_channel: state not covered");
  return C;
}

}  // namespace convtest
