// Branching dual: single-generation offspring law, negative-binomial sampler,
// lifetime/progeny batches, power-law tail fitting against synthetic data
// with known exponents, and the walk/branching duality report.

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "erwlab/branching.hpp"
#include "erwlab/cookie_law.hpp"
#include "erwlab/error.hpp"
#include "erwlab/stats.hpp"

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

const CheckedLaw& half_law() {  // delta = 1/2
  static const CheckedLaw law = validate(single(1, {0.75}));
  return law;
}

const CheckedLaw& crit_law() {  // delta = 1
  static const CheckedLaw law = validate(single(2, {0.75, 0.75}));
  return law;
}

const CheckedLaw& mixed_law() {  // delta = 0.2
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

std::vector<LifetimeSample> batch(const CheckedLaw& law, std::uint64_t master,
                                  std::int64_t count, std::int64_t generation_cap) {
  std::vector<LifetimeSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i)
    out.push_back(sample_lifetime(law, SeedSpec{master, static_cast<std::uint64_t>(i)},
                                  generation_cap));
  return out;
}

}  // namespace

TEST_CASE("negative_binomial_half moments across both sampler branches") {
  // r <= 16 runs direct coin flips, r > 16 the Gamma-Poisson mixture; both
  // must produce NB(r, 1/2): mean r, variance 2r.
  for (std::int64_t r : {1, 2, 16, 17, 100, 1000}) {
    CounterRng rng(SeedSpec{404, static_cast<std::uint64_t>(r)}, Dom::excursion);
    const std::int64_t reps = 20000;
    std::vector<double> draws;
    draws.reserve(reps);
    for (std::int64_t i = 0; i < reps; ++i) {
      const std::int64_t v = negative_binomial_half(r, rng);
      CHECK(v >= 0);
      draws.push_back(double(v));
    }
    const double m = mean(draws);
    const double v = variance(draws);
    // 4 sigma on the sample mean; the variance band uses the NB excess
    // kurtosis bound Var(s^2) ~ (mu4 - v^2)/reps, loosened to 5 sigma.
    CHECK(std::fabs(m - double(r)) <= 4.0 * std::sqrt(2.0 * double(r) / double(reps)));
    CHECK(std::fabs(v - 2.0 * double(r)) <=
          5.0 * std::sqrt((20.0 * double(r) * double(r) + 10.0 * double(r)) / double(reps)));
  }
  CounterRng rng(SeedSpec{404, 99}, Dom::excursion);
  CHECK(negative_binomial_half(0, rng) == 0);
}

TEST_CASE("fair offspring from an empty generation is geometric(1/2)") {
  CounterRng rng(SeedSpec{405, 0}, Dom::excursion);
  const std::int64_t reps = 1000000;
  std::vector<std::int64_t> hist(32, 0);
  for (std::int64_t i = 0; i < reps; ++i) {
    const std::int64_t v = branch_step(fair_law(), 0, rng);
    REQUIRE(v >= 0);
    if (v < 32) ++hist[static_cast<std::size_t>(v)];
  }
  for (int k = 0; k <= 10; ++k) {
    const double p = std::pow(0.5, k + 1);
    const double se = std::sqrt(p * (1.0 - p) / double(reps));
    CHECK(std::fabs(double(hist[k]) / double(reps) - p) <= 4.0 * se);
  }
}

TEST_CASE("offspring extinction probability reflects the first cookie") {
  // From an empty generation the first trial succeeds with the first stack
  // probability, so P(step to 0) is exactly that probability.
  struct Case {
    const CheckedLaw* law;
    double p0;
  };
  for (const Case& c : {Case{&crit_law(), 0.75}, Case{&half_law(), 0.75},
                        Case{&mixed_law(), 0.9}}) {
    CounterRng rng(SeedSpec{406, 0}, Dom::excursion);
    const std::int64_t reps = 200000;
    std::int64_t zeros = 0;
    for (std::int64_t i = 0; i < reps; ++i)
      if (branch_step(*c.law, 0, rng) == 0) ++zeros;
    const double se = std::sqrt(c.p0 * (1.0 - c.p0) / double(reps));
    CHECK(std::fabs(double(zeros) / double(reps) - c.p0) <= 4.0 * se);
  }
}

TEST_CASE("immediate extinction carries zero progeny, and its rate is 1/2") {
  // Immediate extinction is decided by the first generation alone, so a tiny
  // generation cap suffices.  It has to stay tiny: the fair law's chain gets
  // a +1 migration boost each generation and survives forever with positive
  // probability, so a generous cap would burn the full budget on a third of
  // the draws.
  std::int64_t immediate = 0;
  const std::int64_t reps = 100000;
  for (std::int64_t i = 0; i < reps; ++i) {
    const LifetimeSample s =
        sample_lifetime(fair_law(), SeedSpec{407, static_cast<std::uint64_t>(i)}, 64);
    CHECK(s.lifetime >= 1);
    if (s.lifetime == 1 && !s.censored) {
      CHECK(s.progeny == 0);
      ++immediate;
    } else if (!s.censored) {
      CHECK(s.progeny >= 1);
    }
  }
  const double se = std::sqrt(0.25 / double(reps));
  CHECK(std::fabs(double(immediate) / double(reps) - 0.5) <= 4.0 * se);
}

TEST_CASE("censoring flags fire at both caps") {
  // A generation cap of 1 censors exactly the non-extinct half.
  std::int64_t censored = 0;
  for (std::int64_t i = 0; i < 2000; ++i) {
    const LifetimeSample s =
        sample_lifetime(fair_law(), SeedSpec{408, static_cast<std::uint64_t>(i)}, 1);
    CHECK(s.lifetime == 1);
    if (s.censored) ++censored;
  }
  CHECK(censored > 700);
  CHECK(censored < 1300);

  // A tiny progeny cap censors any excursion that gets off the ground.
  bool saw_progeny_censor = false;
  for (std::int64_t i = 0; i < 200; ++i) {
    const LifetimeSample s =
        sample_lifetime(fair_law(), SeedSpec{409, static_cast<std::uint64_t>(i)},
                        1000000, 1);
    if (s.censored) {
      saw_progeny_censor = true;
      CHECK(s.progeny >= 1);
    }
  }
  CHECK(saw_progeny_censor);
  CHECK(error_code_of([] {
          sample_lifetime(fair_law(), SeedSpec{410, 0}, 0);
        }) == Errc::invalid_params);
}

TEST_CASE("tail fit recovers known synthetic exponents") {
  // Pure Pareto lifetimes P(sigma > t) = 1/t  (exponent 1) and
  // P(sigma > t) = 1/sqrt(t)  (exponent 1/2), built directly from uniforms.
  // The power law starts at 1000 so that survival at the window top is still
  // around a percent.  That keeps every grid point at healthy counts: the
  // grid's survival estimates are nested, so the OLS slope noise scales like
  // 1/sqrt(count at the window top), not like 1/sqrt(grid size).
  CounterRng rng(SeedSpec{411, 0}, Dom::excursion);
  std::vector<LifetimeSample> pareto1, pareto_half;
  const std::int64_t reps = 1000000;
  for (std::int64_t i = 0; i < reps; ++i) {
    const double u = rng.next_unit();
    LifetimeSample a;
    a.lifetime = static_cast<std::int64_t>(std::floor(1000.0 / u)) + 1;
    pareto1.push_back(a);
    LifetimeSample b;
    b.lifetime = static_cast<std::int64_t>(std::floor(1000.0 / (u * u))) + 1;
    pareto_half.push_back(b);
  }
  const TailFit f1 = fit_tail(pareto1, TailField::lifetime, TailTransform::identity,
                              2e3, 1e5);
  CHECK(std::fabs(f1.exponent - 1.0) <= 0.05);
  CHECK(f1.tail_count > 100000);
  CHECK(f1.grid_points_used >= 20);
  const TailFit fh = fit_tail(pareto_half, TailField::lifetime, TailTransform::identity,
                              2e3, 1e5);
  CHECK(std::fabs(fh.exponent - 0.5) <= 0.05);
  // The square-root transform doubles the exponent back up: sqrt of the
  // exponent-1/2 sample has survival ~ sqrt(1000)/t, exponent 1.
  const TailFit fs = fit_tail(pareto_half, TailField::lifetime,
                              TailTransform::square_root, 45.0, 316.0);
  CHECK(std::fabs(fs.exponent - 1.0) <= 0.1);
}

TEST_CASE("lifetime tails carry the law's exponent") {
  // delta = 1/2 law: P(sigma > n) ~ C n^{-1/2}.  The cap sits an order of
  // magnitude past the widest fit window, so no window touches censoring.
  const auto half_batch = batch(half_law(), 412, 300000, 100000);
  const TailFit sigma_half = fit_tail(half_batch, TailField::lifetime,
                                      TailTransform::identity, 1e2, 1e4);
  CHECK(sigma_half.exponent > 0.40);
  CHECK(sigma_half.exponent < 0.60);
  CHECK(std::fabs(sigma_half.exponent - sigma_half.hill_exponent) <= 0.2);

  // Progeny on the square-root scale shares it: P(sqrt(Sigma) > n) ~ C n^{-1/2}.
  const TailFit progeny_half = fit_tail(half_batch, TailField::progeny,
                                        TailTransform::square_root, 1e2, 3e3);
  CHECK(progeny_half.exponent > 0.35);
  CHECK(progeny_half.exponent < 0.65);

  // delta = 1 law: exponent near 1.  Survival decays a full order of
  // magnitude faster here than at delta = 1/2, so the window keeps a lower
  // top and the batch is larger, preserving healthy counts at the top edge.
  const auto crit_batch = batch(crit_law(), 413, 1000000, 20000);
  const TailFit sigma_crit = fit_tail(crit_batch, TailField::lifetime,
                                      TailTransform::identity, 1e2, 2e3);
  CHECK(sigma_crit.exponent > 0.85);
  CHECK(sigma_crit.exponent < 1.15);
}

TEST_CASE("tail fit refuses starved or censor-contaminated windows") {
  const auto tiny = batch(fair_law(), 414, 100, 1000);
  CHECK(error_code_of([&] {
          fit_tail(tiny, TailField::lifetime, TailTransform::identity, 10.0, 100.0);
        }) == Errc::insufficient_data);

  // Cap everything at 50 generations, then ask about the region past the cap.
  const auto capped = batch(half_law(), 415, 20000, 50);
  CHECK(error_code_of([&] {
          fit_tail(capped, TailField::lifetime, TailTransform::identity, 10.0, 200.0);
        }) == Errc::range_beyond_censoring);
  CHECK(error_code_of([&] {
          fit_tail(capped, TailField::lifetime, TailTransform::identity, 200.0, 20.0);
        }) == Errc::invalid_params);
}

TEST_CASE("duality at level one: both sides draw the same offspring law") {
  const DualityReport rep = verify_duality(fair_law(), 1, 40000, SeedSpec{416, 0});
  CHECK(rep.level == 1);
  CHECK(rep.branch_samples == 40000);
  // The driftless walk's first-passage time has a one-half power tail, so a
  // small fraction of runs exhaust the million-step cap; counts, unlike
  // durations, are essentially unbiased by that censoring.
  CHECK(rep.walk_timeouts < 120);
  CHECK(rep.walk_samples == 40000 - rep.walk_timeouts);
  REQUIRE(rep.walk_means.size() == 1);
  REQUIRE(rep.branch_means.size() == 1);
  // Both coordinates are geometric(1/2) with mean 1.
  CHECK(std::fabs(rep.walk_means[0] - 1.0) <= 4.0 * std::sqrt(2.0 / 40000.0));
  CHECK(std::fabs(rep.branch_means[0] - 1.0) <= 4.0 * std::sqrt(2.0 / 40000.0));
  CHECK(std::fabs(rep.walk_means[0] - rep.branch_means[0]) <=
        4.0 * rep.diff_std_errors[0]);
  CHECK(rep.tv_distance <= 0.02);
}

TEST_CASE("duality across laws and levels") {
  int combo = 0;
  for (const CheckedLaw* law :
       {&fair_law(), &half_law(), &crit_law(), &mixed_law()}) {
    for (int level : {2, 3}) {
      const DualityReport rep = verify_duality(
          *law, level, 20000, SeedSpec{417, static_cast<std::uint64_t>(combo++)});
      CHECK(rep.walk_timeouts < 200);
      REQUIRE(rep.walk_means.size() == static_cast<std::size_t>(level));
      for (int j = 0; j < level; ++j)
        CHECK(std::fabs(rep.walk_means[j] - rep.branch_means[j]) <=
              4.0 * rep.diff_std_errors[j]);
      // The truncated joint laws agree to sampling noise.
      CHECK(rep.tv_distance <= 0.03);
      CHECK(rep.tv_distance <= 5.0 * rep.tv_noise_floor + 0.01);
    }
  }
  CHECK(error_code_of([] {
          verify_duality(fair_law(), 0, 100, SeedSpec{418, 0});
        }) == Errc::invalid_params);
}

TEST_CASE("chains from a tall generation die on a linear time scale") {
  // Start the chain at height m by hand and watch it hit zero.  The critical
  // law's extinction time from height m grows about linearly in m, so the
  // median ratio between m = 10000 and m = 1000 sits near 10, far from the
  // ~100 a quadratic scale would give.
  auto extinction_median = [](std::int64_t m) {
    std::vector<double> times;
    for (std::uint64_t rep = 0; rep < 120; ++rep) {
      CounterRng rng(SeedSpec{419, rep}, Dom::excursion, static_cast<std::uint64_t>(m));
      std::int64_t v = m;
      std::int64_t t = 0;
      while (v > 0 && t < 10000000) {
        v = branch_step(crit_law(), v, rng);
        ++t;
      }
      times.push_back(double(t));
    }
    return median(times);
  };
  const double med_small = extinction_median(1000);
  const double med_large = extinction_median(10000);
  const double ratio = med_large / med_small;
  CHECK(ratio > 4.0);
  CHECK(ratio < 30.0);
}

TEST_CASE("independent excursions in a batch are uncorrelated") {
  // Correlation between consecutive capped lifetimes in seed order.
  const std::int64_t reps = 20001;
  std::vector<double> caps;
  for (std::int64_t i = 0; i < reps; ++i) {
    const LifetimeSample s =
        sample_lifetime(fair_law(), SeedSpec{420, static_cast<std::uint64_t>(i)}, 100);
    caps.push_back(double(std::min<std::int64_t>(s.lifetime, 100)));
  }
  std::vector<double> a(caps.begin(), caps.end() - 1);
  std::vector<double> b(caps.begin() + 1, caps.end());
  const double ma = mean(a), mb = mean(b);
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma) * (b[i] - mb);
  cov /= double(a.size());
  const double corr = cov / std::sqrt(variance(a) * variance(b));
  CHECK(std::fabs(corr) <= 4.0 / std::sqrt(double(a.size())));
}
