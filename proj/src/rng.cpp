#include "convtest/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace convtest {

namespace {

constexpr std::uint64_t kPhiloxM = 0xD2B74407B1CE6E93ULL;
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(prod >> 64);
  lo = static_cast<std::uint64_t>(prod);
}

}  // namespace

void Philox::refill() {
  std::uint64_t c0 = counter_++;
  std::uint64_t c1 = stream_;
  std::uint64_t k = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi, lo;
    mulhilo(kPhiloxM, c0, hi, lo);
    c0 = hi ^ k ^ c1;
    c1 = lo;
    k += kWeyl;
  }
  block_[0] = c0;
  block_[1] = c1;
  have_ = 2;
}

std::uint64_t Philox::next_u64() {
  if (have_ == 0) refill();
  return block_[--have_];
}

double Philox::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::next_double_pos() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Philox::next_gaussian() {
  if (have_gauss_) {
    have_gauss_ = false;
    return cached_gauss_;
  }
  double u1 = next_double_pos();
  double u2 = next_double();
  double r = std::sqrt(-2.0 * std::log(u1));
  double arg = 6.283185307179586477 * u2;
  cached_gauss_ = r * std::sin(arg);
  have_gauss_ = true;
  return r * std::cos(arg);
}

long long Philox::next_poisson(double mu) {
  if (!(mu >= 0.0)) throw std::domain_error("next_poisson: negative intensity");
  if (mu == 0.0) return 0;
  if (mu < 10.0) {
    // Knuth inversion: count factors until the uniform product drops below e^{-mu}.
    double limit = std::exp(-mu);
    double prod = 1.0;
    long long k = -1;
    do {
      prod *= next_double_pos();
      ++k;
    } while (prod > limit);
    return k;
  }
  // Hoermann's transformed rejection (PTRD).
  const double smu = std::sqrt(mu);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mu = std::log(mu);
  for (;;) {
    double u = next_double() - 0.5;
    double v = next_double_pos();
    double us = 0.5 - std::fabs(u);
    double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    double k = kf;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_mu - mu - std::lgamma(k + 1.0)) {
      return static_cast<long long>(kf);
    }
  }
}

int Philox::next_categorical(const Vec& p) {
  double total = p.sum();
  double u = next_double() * total;
  double acc = 0.0;
  int m = static_cast<int>(p.size());
  for (int i = 0; i < m; ++i) {
    acc += p[i];
    if (u < acc) return i + 1;
  }
  return m;
}

}  // namespace convtest
