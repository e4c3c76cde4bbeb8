#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace isingep {

// Seeded RNG used everywhere stochastic. mt19937_64 supplies the raw stream;
// the distributions are hand-rolled because the std:: distribution adapters
// are implementation-defined and reruns must be bit-exact.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  // uniform double in [0, 1)
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n); modulo bias is ~n/2^64, irrelevant here
  int below(int n) { return static_cast<int>(gen_() % static_cast<uint64_t>(n)); }

  int8_t spin() { return (gen_() & 1u) ? int8_t{1} : int8_t{-1}; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<size_t>(below(static_cast<int>(i)))]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// splitmix64 finalizer; derives independent sub-stream seeds from a run seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace isingep
