#pragma once

#include <cstdint>

#include "convtest/linalg.hpp"

namespace convtest {

// Counter-based generator (Philox-2x64, 10 rounds).  A (seed, stream) pair
// names an independent stream; the counter advances within it.  Replications
// can therefore be partitioned across workers by stream id with results
// independent of the partition.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream)
      : key_(seed), stream_(stream), counter_(0), have_(0) {}

  std::uint64_t seed() const { return key_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double next_double();
  // Uniform on (0,1].
  double next_double_pos();

  // Standard normal via Box-Muller (pairs cached).
  double next_gaussian();

  // Poisson(mu): product-of-uniforms inversion for small mu, PTRD-style
  // transformed rejection for large mu.
  long long next_poisson(double mu);

  // Index in 1..m with probabilities p (need not be exactly normalized).
  int next_categorical(const Vec& p);

 private:
  void refill();

  std::uint64_t key_, stream_, counter_;
  std::uint64_t block_[2];
  int have_;
  bool have_gauss_ = false;
  double cached_gauss_ = 0.0;
};

}  // namespace convtest
