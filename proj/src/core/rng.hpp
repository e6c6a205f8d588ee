#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace lnm {

// xoshiro256** seeded through splitmix64. Only integer arithmetic feeds the
// raw stream, so a seed yields the same sequence on every platform.
class Rng {
public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller; the second variate is cached.
  double normal();
  // Uniform integer in [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  State state() const noexcept { return s_; }
  void set_state(const State &s) noexcept {
    s_ = s;
    has_spare_ = false;
  }

  friend bool operator==(const Rng &a, const Rng &b) noexcept { return a.s_ == b.s_; }

private:
  State s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace lnm
