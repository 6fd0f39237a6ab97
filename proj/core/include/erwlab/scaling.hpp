#pragma once

// Rescaled processes and the lemma-level diagnostics that certify why the
// scaling limits hold.
//
// Diffusive regime (delta in [0,1)): X^{(n)}(t) = X_{[nt]} / sqrt(n) converges
// to the (delta, -delta)-perturbed Brownian motion.  Boundary regime
// (delta = 1): X_{[nt]} / (sqrt(n) log n) converges to a multiple of the
// running maximum of Brownian motion, and the hitting-time process
// T_{[nx]} / (n^2 / log^2 n) to a stable-1/2 subordinator.  The diagnostics
// here measure the mechanisms behind those statements on actual runs: how the
// accumulated conditional drift tracks delta times the range, how small the
// quadratic-variation defect stays, how far the walk backtracks below its
// maximum, and how many sites keep unspent cookies.
//
// All logarithms are natural; the limits' unknown constants absorb the base.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "erwlab/cookie_law.hpp"
#include "erwlab/rng.hpp"
#include "erwlab/walk.hpp"

namespace erw {

enum class ScaleMode {
  diffusive,  // space scale sqrt(n)
  boundary,   // space scale sqrt(n) * log(n)
};

// Space scale s(n) for the mode; boundary mode needs n >= 2.
double scale_factor(std::int64_t n, ScaleMode mode);

// A rescaled trajectory: values[k] = X_k / s(n) at times[k] = k / n for
// k = 0..[n*horizon].  Companion traces (running max, martingale and drift
// parts, all divided by the same s(n)) are filled on request.
struct ScaledPath {
  std::int64_t n = 0;
  ScaleMode mode = ScaleMode::diffusive;
  double scale = 1.0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> running_max;      // S_k / s(n)        (optional)
  std::vector<double> martingale_part;  // B_k / s(n)        (optional)
  std::vector<double> drift_part;       // C_k / s(n)        (optional)
};

ScaledPath rescale(const WalkRun& run, std::int64_t n, ScaleMode mode,
                   double horizon = 1.0, bool with_companions = false);

// sup_{k<=n} |C_k - delta * R_k| / sqrt(n), with R_k = S_k - I_k + 1 the
// number of visited sites.  The drift accumulated by time k tracks delta
// times the range; this statistic tends to zero in probability as n grows.
double drift_tracking(const WalkRun& run, std::int64_t n, double delta);

// (1/n) * sum_{k<n} d_k^2 over the recorded conditional drifts d_k: the gap
// between the walk's quadratic variation and the martingale part's.  Each
// site yields at most M nonzero drifts, each squared <= 1, so the defect is
// bounded by M * R_n / n on every run, exactly.
double quad_var_defect(const WalkRun& run, std::int64_t n);
double quad_var_bound(const WalkRun& run, std::int64_t n, int cookies_per_site);

// max_{j<=n} (S_j - X_j): how far the walk has fallen below its running
// maximum.  Vanishes under boundary scaling when delta = 1.
std::int64_t backtrack(const WalkRun& run, std::int64_t n);

// Number of sites in [a, b] visited fewer than `cookies_per_site` times by
// `time` — sites whose drift the walk has not fully consumed.  `time` must be
// the run's final time for summary records; any time up to `steps` works for
// full records.
std::int64_t unvisited_cookie_count(const WalkRun& run, std::int64_t a,
                                    std::int64_t b, std::int64_t time,
                                    int cookies_per_site);

// Boundary-case hitting-time process from one run: T^{(n)}(x) =
// T_{[nx]} / (n^2 / log^2 n) at each requested level.  Levels must be
// nondecreasing and nonnegative; scaled_times holds NaN past the point where
// the step cap ran out (complete == false).
struct HitScaling {
  std::int64_t n = 0;
  double time_scale = 0.0;  // n^2 / log^2 n
  std::vector<double> levels;
  std::vector<double> scaled_times;
  bool complete = false;
};

HitScaling hit_scaling(const CheckedLaw& law, SeedSpec seed, std::int64_t n,
                       std::span<const double> levels, std::int64_t step_cap);

}  // namespace erw
