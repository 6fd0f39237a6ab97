#pragma once

// The branching process dual to the walk.
//
// Fix a level n and look at the walk's downcrossing counts D(k) = number of
// jumps k -> k-1 before the first passage of n.  Read from the top down,
// (D(n), D(n-1), ..., D(0)) has the law of a process V with V_0 = 0 whose
// step is: given V_k = v, run Bernoulli trials through a fresh cookie stack
// (probability omega(i) on trial i < M, then 1/2) and let V_{k+1} be the
// number of failures before the (v+1)-th success.  Lifetime and total progeny
// of V control the walk's return times and excursion sizes, and their tails
//   P(lifetime > n) ~ C1 n^-delta,   P(progeny > n^2) ~ C2 n^-delta
// carry the exponent delta that drives every scaling limit here.

#include <cstdint>
#include <span>
#include <vector>

#include "erwlab/cookie_law.hpp"
#include "erwlab/rng.hpp"

namespace erw {

// One generation: failures before the (current+1)-th success through a fresh
// stack drawn from the law.  The post-stack fair trials are drawn in one shot
// as a negative binomial via its Gamma-Poisson mixture, so a step costs O(M)
// work no matter how large `current` is.
std::int64_t branch_step(const CheckedLaw& law, std::int64_t current, CounterRng& rng);

// Number of failures before the r-th success in fair coin flips
// (negative binomial with success probability 1/2), exposed for testing.
std::int64_t negative_binomial_half(std::int64_t r, CounterRng& rng);

struct LifetimeSample {
  std::int64_t lifetime = 0;   // first k with V_k = 0; a lower bound if censored
  std::uint64_t progeny = 0;   // sum of V_k before extinction; partial if censored
  bool censored = false;
};

// Runs V from V_0 = 0 to extinction, censoring at `generation_cap` generations
// or once accumulated progeny exceeds `progeny_cap`.  The draw is keyed by
// seed.stream, so excursion i of a batch is reproducible in isolation.
// Extinction at the first step (V_1 = 0) gives lifetime 1, progeny 0.
LifetimeSample sample_lifetime(const CheckedLaw& law, SeedSpec seed,
                               std::int64_t generation_cap,
                               std::uint64_t progeny_cap = ~std::uint64_t{0});

// ---- tail estimation --------------------------------------------------------

enum class TailField { lifetime, progeny };
enum class TailTransform { identity, square_root };

// Power-law fit of a survival curve: S(t) ~ amplitude * t^(-exponent) over a
// log-spaced grid in [window_lo, window_hi], by least squares on
// (log t, log S).  A Hill estimate over the same window is carried alongside
// as a cross-check.  std_error is the OLS slope standard error (grid points
// overlap, so treat it as a heuristic scale, not an exact CI).
struct TailFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double std_error = 0.0;
  double hill_exponent = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  int grid_points_used = 0;
  std::int64_t tail_count = 0;  // samples above window_lo
};

// Fits the chosen field (optionally square-root transformed, e.g. sqrt of
// progeny, whose exponent then matches the lifetime's).  Censored samples are
// exact exceedances for thresholds below every censor point; the fit refuses
// windows that reach into censored territory (Errc::range_beyond_censoring)
// and demands min_samples uncensored draws (Errc::insufficient_data).
TailFit fit_tail(std::span<const LifetimeSample> samples, TailField field,
                 TailTransform transform, double window_lo, double window_hi,
                 int grid_points = 25, std::int64_t min_samples = 10000);

// ---- duality check ----------------------------------------------------------

// Simulates both sides of the downcrossing duality at a small level and
// compares the joint law of (V_1..V_level) against (D(level-1)..D(0)) on a
// truncated support: coordinates are clipped at coordinate_cap with one
// overflow bucket each.  tv_noise_floor is a split-half total-variation
// distance on the branching sample, scaled by 1/sqrt(2) to be comparable to
// the cross-side distance; a true match shows tv_distance of the same order.
struct DualityReport {
  int level = 0;
  int coordinate_cap = 0;
  double tv_distance = 0.0;
  double tv_noise_floor = 0.0;
  std::vector<double> walk_means;        // E D(level-j) for j = 1..level
  std::vector<double> branch_means;      // E V_j
  std::vector<double> diff_std_errors;   // std error of the mean difference
  std::int64_t walk_samples = 0;
  std::int64_t branch_samples = 0;
  std::int64_t walk_timeouts = 0;        // first-passage runs that hit the step cap
};

DualityReport verify_duality(const CheckedLaw& law, int level,
                             std::int64_t samples_per_side, SeedSpec seed,
                             int coordinate_cap = 1,
                             std::int64_t walk_step_cap = 1000000);

}  // namespace erw
