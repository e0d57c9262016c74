#include "rdhaz/rng.hpp"

#include <cmath>

#include "rdhaz/errors.hpp"

namespace rdhaz {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t s0, std::uint64_t s1) {
  std::uint64_t state = s0 ^ (0xA5A5A5A5A5A5A5A5ULL + s1 * 0x9E3779B97F4A7C15ULL);
  std::seed_seq::result_type seq[8];
  for (auto& v : seq) v = static_cast<std::seed_seq::result_type>(splitmix64(state));
  std::seed_seq sseq(seq, seq + 8);
  return std::mt19937_64(sseq);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seeded_engine(seed, 0)) {}

Rng Rng::for_replicate(std::uint64_t seed, std::uint64_t replicate) {
  Rng r(0);
  r.engine_ = seeded_engine(seed, replicate + 1);
  return r;
}

double Rng::uniform01() {
  // 53-bit mantissa; shifted into (0,1) to keep log() finite.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw ValidationError("exponential rate must be positive");
  return -std::log(uniform01()) / rate;
}

double Rng::normal() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw ValidationError("gamma shape and scale must be positive");
  if (shape < 1.0) {
    // Boost trick: G(a) = G(a+1) * U^{1/a}.
    const double g = gamma(shape + 1.0, 1.0);
    return scale * g * std::pow(uniform01(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

}  // namespace rdhaz
