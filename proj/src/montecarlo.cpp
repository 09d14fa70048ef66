#include "convtest/montecarlo.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace convtest {

namespace {

// Regularized incomplete beta I_x(a,b) by the standard continued fraction.
double betacf(double a, double b, double x) {
  const int maxit = 300;
  const double eps = 3e-14, fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= maxit; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Inverse of I_x(a,b) in x by bisection (monotone).
double betai_inv(double a, double b, double p) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (betai(a, b, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void clopper_pearson(long long k, long long n, double conf, double& lo, double& hi) {
  if (n <= 0 || k < 0 || k > n) throw std::invalid_argument("clopper_pearson: bad counts");
  double alpha = 1.0 - conf;
  lo = (k == 0) ? 0.0 : betai_inv(static_cast<double>(k), static_cast<double>(n - k + 1),
                                  alpha / 2.0);
  hi = (k == n) ? 1.0 : betai_inv(static_cast<double>(k + 1), static_cast<double>(n - k),
                                  1.0 - alpha / 2.0);
}

RiskEstimate estimate_risk(const ProductScheme& scheme, const TruthSpec& truth,
                           const std::function<bool(const Vec&)>& rejects_truth,
                           long long N, std::uint64_t seed, std::uint64_t stream0,
                           int workers) {
  if (N < 1) throw std::invalid_argument("estimate_risk: N must be >= 1");
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  workers = static_cast<int>(std::min<long long>(workers, N));

  std::vector<long long> counts(workers, 0);
  auto body = [&](int w) {
    long long local = 0;
    for (long long r = w; r < N; r += workers) {
      Philox rng(seed, stream0 + static_cast<std::uint64_t>(r));
      Vec mu = truth.sampler ? truth.sampler(rng) : truth.point;
      Vec obs = sample_obs(scheme, mu, rng);
      if (rejects_truth(obs)) ++local;
    }
    counts[w] = local;
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }

  RiskEstimate est;
  est.n = N;
  for (long long c : counts) est.rejections += c;
  est.eps_hat = static_cast<double>(est.rejections) / static_cast<double>(N);
  clopper_pearson(est.rejections, N, 0.95, est.ci_lo, est.ci_hi);
  return est;
}

std::vector<int> simulate_chain(const Mat& S, const Vec& initial, int K,
                                const Mat& channel, Philox& rng) {
  const int n = static_cast<int>(S.rows());
  if (S.cols() != n) throw std::invalid_argument("simulate_chain: S must be square");
  for (int j = 0; j < n; ++j)
    if (std::fabs(S.col(j).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("simulate_chain: S must be column-stochastic");
  bool direct = (channel.size() == 0);
  if (!direct && channel.cols() != n)
    throw std::invalid_argument("simulate_chain: channel column count mismatch");

  std::vector<int> out;
  out.reserve(K + 1);
  int state = rng.next_categorical(initial);
  out.push_back(direct ? state : rng.next_categorical(channel.col(state - 1)));
  for (int t = 1; t <= K; ++t) {
    state = rng.next_categorical(S.col(state - 1));
    out.push_back(direct ? state : rng.next_categorical(channel.col(state - 1)));
  }
  return out;
}

AffinityEstimate affinity_lower_bound(const Vec& p1, const Vec& p2, int K, long long N,
                                      std::uint64_t seed, std::uint64_t stream0) {
  const int m = static_cast<int>(p1.size());
  if (p2.size() != m) throw std::invalid_argument("affinity_lower_bound: size mismatch");
  if (K < 1 || N < 2) throw std::invalid_argument("affinity_lower_bound: bad K or N");
  Vec l1(m), l2(m);
  for (int i = 0; i < m; ++i) {
    if (!(p1[i] > 0.0) || !(p2[i] > 0.0))
      throw std::domain_error("affinity_lower_bound: zero-probability outcome");
    l1[i] = std::log(p1[i]);
    l2[i] = std::log(p2[i]);
  }

  // cumulative tables for fast categorical draws
  Vec c1(m), c2(m);
  double a1 = 0.0, a2 = 0.0;
  for (int i = 0; i < m; ++i) {
    a1 += p1[i];
    c1[i] = a1;
    a2 += p2[i];
    c2[i] = a2;
  }
  auto draw = [&](const Vec& cum, Philox& rng) {
    double u = rng.next_double() * cum[m - 1];
    int lo = 0, hi = m - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (u < cum[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  };

  long long half = N / 2;
  double s1 = 0.0, s1sq = 0.0, s2 = 0.0, s2sq = 0.0;
  for (long long r = 0; r < half; ++r) {
    Philox rng(seed, stream0 + static_cast<std::uint64_t>(r));
    double log_ratio_12 = 0.0;  // ln p2^K / p1^K for a draw from p1
    double log_ratio_21 = 0.0;
    for (int k = 0; k < K; ++k) {
      int w = draw(c1, rng);
      log_ratio_12 += l2[w] - l1[w];
    }
    for (int k = 0; k < K; ++k) {
      int w = draw(c2, rng);
      log_ratio_21 += l1[w] - l2[w];
    }
    double v1 = std::min(1.0, std::exp(log_ratio_12));
    double v2 = std::min(1.0, std::exp(log_ratio_21));
    s1 += v1;
    s1sq += v1 * v1;
    s2 += v2;
    s2sq += v2 * v2;
  }
  double m1 = s1 / half, m2 = s2 / half;
  double var1 = std::max(0.0, s1sq / half - m1 * m1);
  double var2 = std::max(0.0, s2sq / half - m2 * m2);
  AffinityEstimate est;
  est.value = 0.5 * (m1 + m2);
  est.std_error = 0.5 * std::sqrt((var1 + var2) / static_cast<double>(half));
  est.n = 2 * half;
  return est;
}

}  // namespace convtest
