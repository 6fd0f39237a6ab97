#pragma once

// The excited walk itself: step kernel, fixed-horizon and first-passage
// drivers, downcrossing counts, and an exact enumeration oracle for short
// horizons.
//
// The walk starts at 0.  On its c-th visit to site z (counting from 0) it
// steps right with the stack probability omega_z(c) while c < M and with 1/2
// afterwards.  Every random step is the pure function of
// (seed, site, visit count) provided by the rng module, with the environment
// on its own sub-stream, so runs are reproducible and the same environment
// can be re-run under fresh walk noise.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "erwlab/cookie_law.hpp"
#include "erwlab/rng.hpp"

namespace erw {

enum class RecordMode {
  summary,  // scalars, extrema, hitting times, final visit counts
  full,     // summary plus per-step increments and conditional drifts
};

// Final visit counts by site, stored densely over the visited range.  A
// visit is counted when the walk steps *out* of a site (the moment a cookie
// is consumed), so the counts total the number of steps and the final
// position's last occupancy is not counted.
struct LocalTimes {
  std::int64_t lowest = 0;
  std::vector<std::uint32_t> counts;

  std::uint32_t at(std::int64_t site) const {
    const std::int64_t idx = site - lowest;
    if (idx < 0 || idx >= static_cast<std::int64_t>(counts.size())) return 0;
    return counts[static_cast<std::size_t>(idx)];
  }
  std::int64_t highest() const {
    return lowest + static_cast<std::int64_t>(counts.size()) - 1;
  }
};

// Record of one simulated walk.  `steps` is the recorded horizon; the summary
// fields describe the path up to that time.  Traces are present only for
// RecordMode::full runs: increments[k] is X_{k+1} - X_k and
// conditional_drifts[k] is E[X_{k+1} - X_k | path up to k], i.e. the stack
// drift consumed at step k (zero once the site's cookies are spent).
struct WalkRun {
  std::int64_t steps = 0;
  std::int64_t position = 0;       // X at time `steps`
  std::int64_t running_max = 0;    // S = max_{j<=steps} X_j
  std::int64_t running_min = 0;    // I = min_{j<=steps} X_j
  std::int64_t max_backtrack = 0;  // max_{j<=steps} (S_j - X_j)
  std::int64_t first_return = -1;  // first j >= 1 with X_j = 0, or -1

  // hits_right[x-1] = first passage time of +x for x = 1..running_max;
  // hits_left[x-1] likewise for -x.
  std::vector<std::int64_t> hits_right;
  std::vector<std::int64_t> hits_left;

  LocalTimes local_times;

  std::vector<std::int8_t> increments;
  std::vector<double> conditional_drifts;

  std::int64_t range() const { return running_max - running_min + 1; }
  bool has_trace() const { return steps == 0 || !increments.empty(); }

  // First passage time of `level` (nonzero), if reached within the record.
  std::optional<std::int64_t> hitting_time(std::int64_t level) const;

  // Derived per-step sequences (all need a full-mode run, Errc::missing_trace).
  // The martingale/drift decomposition X_k = B_k + C_k: C is the prefix sum
  // of the recorded conditional drifts and B is defined as X - C index by
  // index, so the decomposition identity is exact by construction.
  std::vector<std::int64_t> positions() const;    // X_0 .. X_steps
  std::vector<double> drift_part() const;         // C_0 .. C_steps
  std::vector<double> martingale_part() const;    // B_k = X_k - C_k
};

// Runs exactly n steps.  Environment and walk noise both derive from `seed`
// on separate sub-streams.
WalkRun run_fixed(const CheckedLaw& law, SeedSpec seed, std::int64_t n,
                  RecordMode mode = RecordMode::full);

// As run_fixed, but the environment comes from `environment_seed` while the
// step noise comes from `noise_seed` (quenched re-runs).
WalkRun run_fixed_quenched(const CheckedLaw& law, SeedSpec environment_seed,
                           SeedSpec noise_seed, std::int64_t n,
                           RecordMode mode = RecordMode::full);

// First-passage run: walks until hitting `target` (nonzero) or exhausting
// `step_cap` steps.  A missing hit_time signals the cap ran out — the caller
// decides whether that cap was too small; it is not an error.
struct HitResult {
  std::optional<std::int64_t> hit_time;
  WalkRun run;
};

HitResult run_to_hit(const CheckedLaw& law, SeedSpec seed, std::int64_t target,
                     std::int64_t step_cap, RecordMode mode = RecordMode::summary);
HitResult run_to_hit_quenched(const CheckedLaw& law, SeedSpec environment_seed,
                              SeedSpec noise_seed, std::int64_t target,
                              std::int64_t step_cap,
                              RecordMode mode = RecordMode::summary);

// Walks until the first return to the origin (the first j >= 1 with X_j = 0)
// or until `step_cap` steps.  hit_time carries the return time when found.
HitResult run_to_return(const CheckedLaw& law, SeedSpec seed,
                        std::int64_t step_cap,
                        RecordMode mode = RecordMode::summary);

// Downcrossing counts below a hit level: counts.at(k) is the number of jumps
// from k to k-1 strictly before the first passage time of `level`.  These
// tie the walk to its branching dual: read at k = level..0 they have the law
// of the branching process started at 0, and they enter the identity
//   T_level = level + 2 * total().
// Needs a full-mode run that hit `level` (Errc::missing_hit / missing_trace).
struct Downcrossings {
  std::int64_t level = 0;
  std::int64_t lowest = 0;
  std::vector<std::int64_t> counts;  // counts[k - lowest], k in [lowest, level]

  std::int64_t at(std::int64_t k) const {
    const std::int64_t idx = k - lowest;
    if (idx < 0 || idx >= static_cast<std::int64_t>(counts.size())) return 0;
    return counts[static_cast<std::size_t>(idx)];
  }
  std::int64_t total() const;
};

Downcrossings downcrossings(const WalkRun& run, std::int64_t level);

// Exact annealed distribution of X_n for n <= 14, by enumerating all 2^n
// paths and integrating each site's stack over the law.  The per-bin sums and
// per-path site products are accumulated in orders invariant under path
// reflection, so the mirror symmetry pmf(law, n)(x) = pmf(mirror(law), n)(-x)
// holds bitwise, not just approximately.
struct ExactPmf {
  int horizon = 0;
  std::map<int, double> probabilities;  // support points -> mass

  double at(int x) const {
    const auto it = probabilities.find(x);
    return it == probabilities.end() ? 0.0 : it->second;
  }
};

ExactPmf exact_pmf(const CheckedLaw& law, int n);  // Errc::horizon_too_large past 14

}  // namespace erw
