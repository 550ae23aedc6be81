#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace scout {

// Deterministic random stream. All randomness in a run flows from a single
// root seed; independent consumers (init, shuffling, dropout, fixtures) take
// labelled child streams so adding a consumer does not shift the others.
//
// Sampling is implemented by hand (not std::*_distribution) so that a fixed
// seed gives the same values on every standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed), seed_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive range, unbiased via rejection.
  int uniform_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + static_cast<int>(v % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
      std::swap(items[static_cast<size_t>(i)], items[static_cast<size_t>(uniform_int(0, i))]);
    }
  }

  // Child stream derived from this stream's seed and a label (splitmix64).
  Rng split(uint64_t label) const {
    uint64_t z = seed_ ^ (label + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return Rng(z);
  }

  uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 gen_;
  uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace scout
