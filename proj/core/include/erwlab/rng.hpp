#pragma once

// Counter-based random number generation.
//
// Every random quantity in the library is a pure function of a (master seed,
// stream id) pair plus a logical coordinate: environment draws are keyed by
// site, walk steps by (site, visit index), excursion and reference-path draws
// by a running counter.  Nothing depends on scheduling or worker count, so any
// run can be reproduced bit-for-bit from its seed alone, and the environment
// key space is split from the walk key space (quenched re-runs: same
// environment, fresh walk noise).
//
// The mixer is the splitmix64 finalizer, which passes the usual statistical
// batteries when driven by distinct counters.

#include <cstdint>
#include <limits>

namespace erw {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer: bijective avalanche mix on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Seed for one logical sample: a master seed shared by a whole experiment and
// a stream id that separates replicas.  Replica i of an experiment always uses
// stream i, which keeps results independent of how replicas are scheduled.
struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

// Hash-combine one word into a key (Boost-style combine behind a full mix).
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t word) noexcept {
  return mix64(key ^ (word + kGoldenGamma + (key << 6) + (key >> 2)));
}

// Sub-stream domains.  Distinct domains give statistically independent draws
// for the same (master, stream): environments never share randomness with the
// walk noise that runs on them.
enum class Dom : std::uint64_t {
  environment = 0xe57,
  walk = 0x3a1,
  excursion = 0xb27,
  gauss = 0x6a5,
  subordinator = 0x50b,
};

// Base key of the (seed, domain) sub-stream.
constexpr std::uint64_t stream_base(SeedSpec seed, Dom dom) noexcept {
  std::uint64_t k = mix64(seed.master ^ kGoldenGamma);
  k = derive_key(k, seed.stream);
  return derive_key(k, static_cast<std::uint64_t>(dom));
}

// Map a signed site to a unique counter (zig-zag: 0,-1,1,-2,2,... -> 0,1,2,...).
constexpr std::uint64_t zigzag(std::int64_t z) noexcept {
  return (static_cast<std::uint64_t>(z) << 1) ^ static_cast<std::uint64_t>(z >> 63);
}

// Random-access draw at coordinate (a, b) under a base key, e.g. (site, visit).
constexpr std::uint64_t keyed_u64(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(mix64(base ^ (a * 0xd1342543de82ef95ull + kGoldenGamma)) +
               b * 0xaf251af3b0f025b5ull);
}

// Uniform double in the open interval (0,1): a centered 52-bit grid
// (k + 1/2) * 2^-52.  Every grid point is exactly representable (k + 1/2
// needs 53 significand bits, the scale is a power of two), so the result is
// never 0 or 1 -- safe under log and inverse-CDF transforms.  A 53-bit grid
// would not be: its top point (2^53 - 1/2) * 2^-53 is a rounding midpoint
// and rounds to exactly 1.0.
constexpr double to_unit(std::uint64_t h) noexcept {
  return (static_cast<double>(h >> 12) + 0.5) * 0x1.0p-52;
}

// Sequential stream over a (seed, domain, key) triple: splitmix64 driven by a
// counter.  Models std::uniform_random_bit_generator so the standard
// distribution adaptors (gamma, Poisson) can consume it directly.
class CounterRng {
 public:
  CounterRng(SeedSpec seed, Dom dom, std::uint64_t key = 0) noexcept
      : base_(derive_key(stream_base(seed, dom), key)) {}

  std::uint64_t next_u64() noexcept { return mix64(base_ + ++counter_ * kGoldenGamma); }
  double next_unit() noexcept { return to_unit(next_u64()); }

  std::uint64_t counter() const noexcept { return counter_; }

  // std::uniform_random_bit_generator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace erw
