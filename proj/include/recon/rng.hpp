#pragma once

#include <cstdint>
#include <vector>

#include "recon/errors.hpp"

namespace recon {

// Finalizer of the splitmix64 generator.  Bijective on 64-bit words with good
// avalanche behaviour; used both for state expansion and stream derivation.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// xoshiro256++ with splitmix64 seeding.  Satisfies uniform_random_bit_generator
// so it can drive the standard <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~static_cast<result_type>(0); }

  explicit Rng(std::uint64_t seed) {
    // splitmix64 state expansion; cannot produce the forbidden all-zero state
    // for any seed because consecutive outputs of a bijection never collide.
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9E3779B97F4A7C15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      word = z ^ (z >> 31);
    }
  }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Unbiased integer in [0, n) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform colour in {0,...,k-1} \ {avoid}.
  std::uint32_t colour_other_than(std::uint32_t k, std::uint32_t avoid) {
    const auto r = static_cast<std::uint32_t>(below(k - 1));
    return r + (r >= avoid ? 1u : 0u);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t v, int s) {
    return (v << s) | (v >> (64 - s));
  }

  std::uint64_t state_[4];
};

// Packs a stream coordinate into the 64-bit index fed to derive_stream:
// 8 bits of purpose tag, 16 bits of k (or other small parameter), 8 bits of
// level/height, 32 bits of entry number.
constexpr std::uint64_t stream_index(std::uint64_t purpose, std::uint64_t a,
                                     std::uint64_t b, std::uint64_t entry) {
  return (purpose << 56) | ((a & 0xFFFFull) << 40) | ((b & 0xFFull) << 32) |
         (entry & 0xFFFFFFFFull);
}

// Independent generator for stream `index` under `master`.  Two finalizer
// rounds decorrelate streams whose indices differ in a single bit.  The
// mapping is part of the reproducibility contract: results for a given seed
// must not change across releases.
inline Rng derive_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(mix64(mix64(master ^ index)));
}

// Vose alias method: O(n) construction, O(1) exact draws from a fixed
// finite probability vector.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw ParameterViolation("AliasTable: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ParameterViolation("AliasTable: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw ParameterViolation("AliasTable: zero total mass");
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;
    std::vector<std::uint32_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      const std::uint32_t l = large.back();
      small.pop_back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    // Leftovers are 1.0 up to rounding.
    for (std::uint32_t i : large) prob_[i] = 1.0;
    for (std::uint32_t i : small) prob_[i] = 1.0;
  }

  std::uint32_t sample(Rng& rng) const {
    const auto i = static_cast<std::uint32_t>(rng.below(prob_.size()));
    return rng.unit() < prob_[i] ? i : alias_[i];
  }

  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace recon
