// Rescaling and the lemma-level diagnostics: exact scale-factor identities,
// bitwise agreement between a rescaled path and its source run, zero cases
// for the driftless law, the pathwise quadratic-variation bound, backtrack
// bookkeeping, unspent-cookie counts, and the boundary hitting-time process.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "erwlab/cookie_law.hpp"
#include "erwlab/error.hpp"
#include "erwlab/scaling.hpp"
#include "erwlab/walk.hpp"

using namespace erw;

namespace {

CookieLaw single(int m, std::vector<double> probs) {
  CookieLaw law;
  law.cookies_per_site = m;
  law.support.push_back({CookieStack(std::move(probs)), 1.0});
  return law;
}

const CheckedLaw& fair_law() {
  static const CheckedLaw law = validate(single(1, {0.5}));
  return law;
}

const CheckedLaw& crit_law() {
  static const CheckedLaw law = validate(single(2, {0.75, 0.75}));
  return law;
}

const CheckedLaw& mixed_law() {
  static const CheckedLaw law = validate(single(2, {0.9, 0.2}));
  return law;
}

template <class F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an erw::Error");
  return Errc::invalid_params;
}

}  // namespace

TEST_CASE("scale factors: closed forms, doubling identity, domain errors") {
  CHECK(scale_factor(10000, ScaleMode::diffusive) == 100.0);
  CHECK(scale_factor(4, ScaleMode::diffusive) == 2.0);
  const double n = 100.0;
  CHECK(scale_factor(100, ScaleMode::boundary) ==
        std::sqrt(n) * std::log(n));  // bitwise recompute
  // sqrt(4n) = 2 sqrt(n) holds bitwise: the argument scales by a perfect
  // square, and rounding commutes with powers of two.
  CHECK(scale_factor(4000, ScaleMode::diffusive) ==
        2.0 * scale_factor(1000, ScaleMode::diffusive));

  CHECK(error_code_of([] { scale_factor(0, ScaleMode::diffusive); }) ==
        Errc::invalid_params);
  CHECK(error_code_of([] { scale_factor(1, ScaleMode::boundary); }) ==
        Errc::invalid_params);
}

TEST_CASE("rescale reproduces the run pointwise, including companions") {
  const WalkRun run = run_fixed(mixed_law(), SeedSpec{701, 0}, 10, RecordMode::full);
  const ScaledPath p = rescale(run, 10, ScaleMode::diffusive, 1.0, true);
  const double s = scale_factor(10, ScaleMode::diffusive);
  REQUIRE(p.values.size() == 11);
  REQUIRE(p.running_max.size() == 11);
  CHECK(p.scale == s);

  const auto xs = run.positions();
  const auto cs = run.drift_part();
  const auto bs = run.martingale_part();
  std::int64_t max_pos = 0;
  for (std::size_t k = 0; k < 11; ++k) {
    CHECK(p.times[k] == double(k) / 10.0);
    CHECK(p.values[k] == double(xs[k]) / s);
    max_pos = std::max(max_pos, xs[k]);
    CHECK(p.running_max[k] == double(max_pos) / s);
    CHECK(p.drift_part[k] == cs[k] / s);
    CHECK(p.martingale_part[k] == bs[k] / s);
  }

  // Half horizon keeps the first half of the grid.
  const ScaledPath half = rescale(run, 10, ScaleMode::diffusive, 0.5);
  REQUIRE(half.values.size() == 6);
  CHECK(half.times.back() == 0.5);
  CHECK(half.running_max.empty());  // companions only on request
}

TEST_CASE("a run rescaled at n and 4n differs by exactly a factor of two") {
  const WalkRun run = run_fixed(crit_law(), SeedSpec{702, 0}, 4000, RecordMode::full);
  const ScaledPath fine = rescale(run, 4000, ScaleMode::diffusive);
  const ScaledPath coarse = rescale(run, 1000, ScaleMode::diffusive);
  for (std::size_t k = 0; k < coarse.values.size(); ++k)
    CHECK(coarse.values[k] == 2.0 * fine.values[k]);
}

TEST_CASE("rescale input checking") {
  const WalkRun run = run_fixed(fair_law(), SeedSpec{703, 0}, 100, RecordMode::full);
  CHECK(error_code_of([&] { rescale(run, 200, ScaleMode::diffusive); }) ==
        Errc::run_too_short);
  CHECK(error_code_of([&] { rescale(run, 100, ScaleMode::diffusive, 0.0); }) ==
        Errc::invalid_params);
  const WalkRun summary = run_fixed(fair_law(), SeedSpec{703, 1}, 100, RecordMode::summary);
  CHECK(error_code_of([&] { rescale(summary, 100, ScaleMode::diffusive); }) ==
        Errc::missing_trace);
}

TEST_CASE("drift tracking is identically zero for the driftless law") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const WalkRun run = run_fixed(fair_law(), SeedSpec{704, s}, 1000, RecordMode::full);
    CHECK(drift_tracking(run, 1000, 0.0) == 0.0);
  }
  const WalkRun run = run_fixed(mixed_law(), SeedSpec{704, 99}, 1000, RecordMode::full);
  CHECK(drift_tracking(run, 1000, 0.2) >= 0.0);
  const WalkRun summary = run_fixed(mixed_law(), SeedSpec{704, 100}, 10, RecordMode::summary);
  CHECK(error_code_of([&] { drift_tracking(summary, 10, 0.2); }) == Errc::missing_trace);
}

TEST_CASE("quadratic variation defect: zero for fair, bounded always") {
  const WalkRun fair = run_fixed(fair_law(), SeedSpec{705, 0}, 2000, RecordMode::full);
  CHECK(quad_var_defect(fair, 2000) == 0.0);

  for (const CheckedLaw* law : {&crit_law(), &mixed_law()}) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const WalkRun run = run_fixed(*law, SeedSpec{706, s}, 3000, RecordMode::full);
      const double defect = quad_var_defect(run, 3000);
      const double bound = quad_var_bound(run, 3000, law->cookies_per_site());
      CHECK(defect >= 0.0);
      CHECK(defect <= bound + 1e-12);
      // Prefix horizons stay bounded too.
      CHECK(quad_var_defect(run, 1000) <=
            quad_var_bound(run, 1000, law->cookies_per_site()) + 1e-12);
    }
  }
  CHECK(error_code_of([&] { quad_var_bound(fair, 2000, 0); }) == Errc::invalid_params);
}

TEST_CASE("backtrack agrees between summary bookkeeping and trace replay") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const WalkRun full = run_fixed(mixed_law(), SeedSpec{707, s}, 2000, RecordMode::full);
    const WalkRun summary =
        run_fixed(mixed_law(), SeedSpec{707, s}, 2000, RecordMode::summary);
    CHECK(backtrack(full, 2000) == full.max_backtrack);
    CHECK(full.max_backtrack == summary.max_backtrack);
    CHECK(backtrack(full, 2000) <= full.range() - 1);
    // Prefix values are monotone in the horizon.
    CHECK(backtrack(full, 500) <= backtrack(full, 1500));
    CHECK(backtrack(full, 0) == 0);
  }
}

TEST_CASE("a monotone prefix never backtracks") {
  for (std::uint64_t s = 0; s < 100000; ++s) {
    const WalkRun run = run_fixed(crit_law(), SeedSpec{708, s}, 5, RecordMode::full);
    if (run.position == 5) {  // five straight right steps
      CHECK(backtrack(run, 5) == 0);
      CHECK(run.max_backtrack == 0);
      return;
    }
  }
  FAIL("no monotone run found");
}

TEST_CASE("unspent-cookie counts over the visited range and beyond") {
  const WalkRun run = run_fixed(fair_law(), SeedSpec{709, 0}, 500, RecordMode::full);
  // Every visited site has spent its single cookie by the final time.
  CHECK(unvisited_cookie_count(run, run.running_min, run.running_max, 500, 1) == 0);
  // Sites beyond the range are untouched by definition.
  CHECK(unvisited_cookie_count(run, run.running_max + 1, run.running_max + 5, 500, 1) == 5);
  // With a deeper stack requirement some boundary sites stay unspent.
  const std::int64_t partial =
      unvisited_cookie_count(run, run.running_min, run.running_max, 500, 3);
  CHECK(partial >= 0);
  CHECK(partial <= run.range());
  // Early-time replay counts departures, so at time zero nothing is spent.
  CHECK(unvisited_cookie_count(run, -5, 5, 0, 1) == 11);
  // Replay just before the end counts departures, so only sites first
  // reached in the last two instants can still be unspent.
  const std::int64_t before =
      unvisited_cookie_count(run, run.running_min, run.running_max, 499, 1);
  CHECK(before >= 0);
  CHECK(before <= 2);

  CHECK(error_code_of([&] { unvisited_cookie_count(run, 3, -3, 500, 1); }) ==
        Errc::invalid_params);
  CHECK(error_code_of([&] { unvisited_cookie_count(run, 0, 1, -1, 1); }) ==
        Errc::invalid_params);
  CHECK(error_code_of([&] { unvisited_cookie_count(run, 0, 1, 501, 1); }) ==
        Errc::run_too_short);
  const WalkRun summary = run_fixed(fair_law(), SeedSpec{709, 1}, 500, RecordMode::summary);
  CHECK(unvisited_cookie_count(summary, -3, 3, 500, 1) >= 0);  // final time is fine
  CHECK(error_code_of([&] { unvisited_cookie_count(summary, 0, 1, 250, 1); }) ==
        Errc::missing_trace);
}

TEST_CASE("boundary hitting-time process: scales, zeros, and monotonicity") {
  const std::vector<double> levels = {0.0, 0.25, 0.5, 1.0};
  const HitScaling h = hit_scaling(crit_law(), SeedSpec{710, 0}, 100, levels, 2000000);
  CHECK(h.n == 100);
  const double ln = std::log(100.0);
  CHECK(h.time_scale == 10000.0 / (ln * ln));
  REQUIRE(h.scaled_times.size() == 4);
  CHECK(h.scaled_times[0] == 0.0);
  if (h.complete) {
    for (std::size_t j = 1; j < 4; ++j) {
      REQUIRE(!std::isnan(h.scaled_times[j]));
      CHECK(h.scaled_times[j] >= h.scaled_times[j - 1]);
      CHECK(h.scaled_times[j] > 0.0);
    }
  }

  // All levels below 1/n floor to the origin: a complete all-zero record.
  const std::vector<double> tiny = {0.0, 0.001};
  const HitScaling z = hit_scaling(crit_law(), SeedSpec{710, 1}, 100, tiny, 1000);
  CHECK(z.complete);
  CHECK(z.scaled_times[1] == 0.0);

  // A starved cap leaves NaN tails but keeps whatever was reached.
  const HitScaling starved =
      hit_scaling(crit_law(), SeedSpec{710, 2}, 100, levels, 100);
  CHECK(!starved.complete);
  CHECK(std::isnan(starved.scaled_times[3]));

  CHECK(error_code_of([&] {
          hit_scaling(fair_law(), SeedSpec{710, 3}, 100, levels, 1000);
        }) == Errc::invalid_params);
  const std::vector<double> bad = {0.5, 0.25};
  CHECK(error_code_of([&] {
          hit_scaling(crit_law(), SeedSpec{710, 4}, 100, bad, 1000);
        }) == Errc::invalid_params);
}
