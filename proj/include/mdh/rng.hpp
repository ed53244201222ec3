#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mdh {

// mt19937_64 with modulo reduction. The raw generator sequence is pinned by
// the standard; std::uniform_int_distribution is not, so it is avoided to
// keep sampling bit-reproducible across standard libraries.
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(uint64_t seed) : gen(seed) {}

  uint64_t below(uint64_t n) { return n <= 1 ? 0 : gen() % n; }
  int64_t below_i(int64_t n) { return static_cast<int64_t>(below(static_cast<uint64_t>(n))); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }
};

} // namespace mdh
