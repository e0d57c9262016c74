#pragma once

#include <cstdint>
#include <random>

namespace rdhaz {

// Deterministic random source. Distribution draws are implemented from
// uniform bits directly so that streams are reproducible across standard
// library versions. Replicate streams are derived by mixing (seed, replicate)
// through SplitMix64, giving independent substreams that can be generated
// concurrently with identical results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng for_replicate(std::uint64_t seed, std::uint64_t replicate);

  double uniform01();                    // open interval (0, 1)
  double exponential(double rate = 1.0); // inverse transform
  double normal();                       // Box-Muller
  // Mean shape*scale gamma via Marsaglia-Tsang; handles shape < 1 by boosting.
  double gamma(double shape, double scale);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace rdhaz
