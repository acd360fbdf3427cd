#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

namespace gzhybrid {

// Deterministic PRNG with fully specified semantics. The standard library's
// distribution objects are implementation-defined, so every random draw in
// this codebase goes through this class instead; seeded runs then reproduce
// byte-for-byte across standard libraries.
//
// Generator: xoshiro256**, seeded through splitmix64. Named sub-streams are
// derived by hashing (seed, stream name, indices), which is how the single
// CLI --seed fans out to data generation, parameter init, augmentation and
// probing without the streams colliding.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  // Sub-stream keyed by a name plus up to three indices, e.g.
  // ("augment", epoch, sample) or ("init", 0, 0).
  static Rng stream(std::uint64_t seed, std::string_view name,
                    std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                    std::uint64_t i2 = 0) {
    std::uint64_t h = fnv1a(name);
    std::uint64_t s = seed;
    s = splitmix64(s ^= h);
    s = splitmix64(s ^= 0x243f6a8885a308d3ULL + i0);
    s = splitmix64(s ^= 0x13198a2e03707344ULL + i1);
    s = splitmix64(s ^= 0xa4093822299f31d0ULL + i2);
    return Rng(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiply-shift reduction; the modulo bias is
  // below 2^-64 per draw, irrelevant at the scales used here.
  std::uint64_t below(std::uint64_t n) {
    return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 handled by boosting.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = 1.0 - uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = 1.0 - uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // rho ~ Dirichlet(alpha), written into out (same length as alpha).
  void dirichlet(std::span<const double> alpha, std::span<double> out) {
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = gamma(alpha[i]);
      sum += out[i];
    }
    for (std::size_t i = 0; i < alpha.size(); ++i) out[i] /= sum;
  }

  // Multinomial(n, p) by sequential binomial-free category draws.
  void multinomial(std::int64_t n, std::span<const double> p,
                   std::span<std::int64_t> out) {
    for (auto& c : out) c = 0;
    for (std::int64_t t = 0; t < n; ++t) {
      double u = uniform();
      double acc = 0.0;
      std::size_t pick = p.size() - 1;
      for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      ++out[pick];
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = std::size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= std::uint64_t(static_cast<unsigned char>(c));
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t state_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gzhybrid
