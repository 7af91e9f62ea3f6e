#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "kgr/errors.hpp"

namespace kgr {

// splitmix64; used to derive independent seeds from (seed, stream indices)
// so that parallel work is reproducible regardless of thread count.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed ^ splitmix64(a));
  s = splitmix64(s ^ splitmix64(b));
  return splitmix64(s ^ splitmix64(c));
}

// mt19937_64 with hand-rolled draw helpers. The std distributions are
// implementation-defined, which would break bit-reproducibility of seeded
// runs across standard libraries, so we never use them.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform double in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw LogicError("uniform_index: empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  int uniform_int(int n) { return static_cast<int>(uniform_index(static_cast<std::uint64_t>(n))); }

  bool bernoulli(double p) { return uniform() < p; }

  // index drawn from an (unnormalized is fine) nonnegative weight vector
  int categorical(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;  // rounding fell off the end
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace kgr
