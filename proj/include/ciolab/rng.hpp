#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace ciolab {

// Self-contained xoshiro256++ generator. The standard <random> distributions
// are implementation-defined, which would tie reproducibility to a particular
// libstdc++ version; every stochastic quantity in this project flows through
// this class instead.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform double in [0, 1) with 53 bits of entropy.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

  // Standard normal via Box-Muller. Consumes exactly two uniforms per call.
  double normal();
  double normal(double mean, double stddev);

  // Exponential with the given mean (> 0).
  double exponential(double mean);

  // Standard Gumbel: -log(-log(U)).
  double gumbel();

  // Derives an independent child stream keyed by a label. Forking does not
  // advance this generator's state.
  Rng fork(std::string_view label) const;

 private:
  std::array<uint64_t, 4> s_;
};

// Stable 64-bit seed derivation: mixes a master seed with a stream label and
// an index. Used to hand out disjoint sub-streams (train vs eval episodes).
uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t index = 0);

// FNV-1a over a byte buffer; used for scenario content hashes.
uint64_t fnv1a(const void* data, size_t len);

}  // namespace ciolab
