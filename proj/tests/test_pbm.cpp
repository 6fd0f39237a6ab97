// Reference processes: Brownian sampling moments, the perturbed-path solver's
// exact identities (defining equation residual, parameter symmetries,
// closed-form single steps), running maxima, first passage, and the
// first-passage subordinator against its closed-form marginal.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "erwlab/error.hpp"
#include "erwlab/pbm.hpp"
#include "erwlab/stats.hpp"

using namespace erw;

namespace {

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

GridPath hand_path(double dt, std::vector<double> values) {
  GridPath p;
  p.kind = PathKind::bm;
  p.dt = dt;
  p.values = std::move(values);
  return p;
}

// Max residual of the defining equation X = B + alpha sup X + beta inf X
// along the whole grid.
double equation_residual(const GridPath& driver, const GridPath& solution,
                         PbmParams params) {
  double max_v = 0.0, min_v = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < solution.size(); ++i) {
    max_v = std::max(max_v, solution.values[i]);
    min_v = std::min(min_v, solution.values[i]);
    const double rhs =
        driver.values[i] + params.alpha * max_v + params.beta * min_v;
    worst = std::max(worst, std::fabs(solution.values[i] - rhs));
  }
  return worst;
}

}  // namespace

TEST_CASE("Brownian sampler: grid shape, origin, and increment moments") {
  const GridPath b = sample_bm(0.01, 1.0, SeedSpec{601, 0});
  CHECK(b.kind == PathKind::bm);
  CHECK(b.dt == 0.01);
  CHECK(b.times.empty());
  REQUIRE(b.size() == 101);
  CHECK(b.values[0] == 0.0);
  CHECK(b.time_at(100) == doctest::Approx(1.0).epsilon(1e-12));

  const std::size_t paths = 100000;
  std::vector<double> endpoints, first_half, second_half;
  for (std::size_t i = 0; i < paths; ++i) {
    const GridPath p = sample_bm(0.01, 1.0, SeedSpec{602, i});
    endpoints.push_back(p.values[100]);
    first_half.push_back(p.values[50]);
    second_half.push_back(p.values[100] - p.values[50]);
  }
  CHECK(std::fabs(mean(endpoints)) <= 4.0 / std::sqrt(double(paths)));
  CHECK(std::fabs(variance(endpoints) - 1.0) <= 4.0 * std::sqrt(2.0 / double(paths)));
  // Disjoint increments are uncorrelated.
  double cov = 0.0;
  const double m1 = mean(first_half), m2 = mean(second_half);
  for (std::size_t i = 0; i < paths; ++i)
    cov += (first_half[i] - m1) * (second_half[i] - m2);
  cov /= double(paths);
  CHECK(std::fabs(cov / 0.5) <= 4.0 / std::sqrt(double(paths)));
  // The endpoint is exactly a sum of Gaussian draws, so its law is standard
  // normal at any dt; one-sample KS against the closed-form CDF.
  const KsResult ks = ks_one_sample(endpoints, [](double t) { return normal_cdf(t); });
  CHECK(ks.statistic <= 0.01);
}

TEST_CASE("identity solve: zero perturbation returns the driver bitwise") {
  const GridPath b = sample_bm(0.001, 1.0, SeedSpec{603, 0});
  const GridPath x = solve_pbm(b, PbmParams{0.0, 0.0});
  CHECK(x.kind == PathKind::pbm);
  CHECK(x.values == b.values);
}

TEST_CASE("solver rejects degenerate parameters and empty drivers") {
  const GridPath b = sample_bm(0.01, 0.1, SeedSpec{604, 0});
  CHECK(error_code_of([&] { solve_pbm(b, PbmParams{1.0, 0.0}); }) ==
        Errc::invalid_params);
  CHECK(error_code_of([&] { solve_pbm(b, PbmParams{0.0, 1.5}); }) ==
        Errc::invalid_params);
  GridPath empty;
  CHECK(error_code_of([&] { solve_pbm(empty, PbmParams{0.5, 0.0}); }) ==
        Errc::invalid_params);
}

TEST_CASE("single steps match the closed forms exactly") {
  // New maximum: x = (b + beta*min)/(1 - alpha) with min = 0.
  const GridPath up = hand_path(1.0, {0.0, 0.5});
  const GridPath xu = solve_pbm(up, PbmParams{0.5, 0.0});
  CHECK(xu.values[1] == 1.0);  // 0.5 / (1 - 0.5), exact in binary
  // New minimum mirror.
  const GridPath down = hand_path(1.0, {0.0, -0.5});
  const GridPath xd = solve_pbm(down, PbmParams{0.0, 0.5});
  CHECK(xd.values[1] == -1.0);
  // Interior step: with the running max pinned at 1 and min at -1, a driver
  // returning toward 0 stays between them and picks up alpha - beta exactly.
  const GridPath wiggle = hand_path(1.0, {0.0, 0.5, -0.5, 0.1});
  const GridPath xw = solve_pbm(wiggle, PbmParams{0.25, 0.25});
  const double max_v = *std::max_element(xw.values.begin(), xw.values.end());
  const double min_v = *std::min_element(xw.values.begin(), xw.values.end());
  CHECK(xw.values[3] == 0.1 + (0.25 * max_v + 0.25 * min_v));
}

TEST_CASE("the defining equation holds along every solved path") {
  const std::vector<PbmParams> cases = {
      {0.5, -0.5}, {0.9, 0.5}, {-2.0, 0.3}, {0.99, 0.99}, {-0.3, -0.7}};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const GridPath b = sample_bm(0.001, 1.0, SeedSpec{605, 100 * c + s});
      const GridPath x = solve_pbm(b, cases[c]);
      REQUIRE(x.size() == b.size());
      CHECK(x.values[0] == 0.0);
      CHECK(equation_residual(b, x, cases[c]) <= 1e-10);
    }
  }
}

TEST_CASE("swap the weights, negate the driver, and the solution negates bitwise") {
  for (const PbmParams p : {PbmParams{0.5, -0.25}, PbmParams{0.9, 0.6}}) {
    const GridPath b = sample_bm(0.001, 1.0, SeedSpec{606, 7});
    GridPath neg = b;
    for (double& v : neg.values) v = -v;
    const GridPath x = solve_pbm(b, p);
    const GridPath y = solve_pbm(neg, PbmParams{p.beta, p.alpha});
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.values[i] == -y.values[i]);
  }
}

TEST_CASE("running_max is a nondecreasing envelope and idempotent") {
  const GridPath b = sample_bm(0.001, 1.0, SeedSpec{607, 3});
  const GridPath m = running_max(b);
  CHECK(m.kind == PathKind::runmax);
  REQUIRE(m.size() == b.size());
  CHECK(m.values[0] == b.values[0]);
  for (std::size_t i = 1; i < m.size(); ++i) {
    CHECK(m.values[i] >= m.values[i - 1]);
    CHECK(m.values[i] >= b.values[i]);
  }
  const GridPath mm = running_max(m);
  CHECK(mm.values == m.values);
}

TEST_CASE("the running maximum at time one has the half-normal law") {
  // Reflection principle: sup B over [0,1] matches |N(0,1)|.  The grid sees
  // slightly shallow maxima (bias ~ 0.6 sqrt(dt)), so dt must be small here.
  const std::size_t paths = 30000;
  std::vector<double> sups;
  for (std::size_t i = 0; i < paths; ++i) {
    const GridPath p = sample_bm(1e-4, 1.0, SeedSpec{608, i});
    const GridPath m = running_max(p);
    sups.push_back(m.values.back());
  }
  const KsResult ks = ks_one_sample(sups, [](double t) { return half_normal_cdf(t); });
  CHECK(ks.statistic <= 0.015);
}

TEST_CASE("first passage reads the grid left to right") {
  const GridPath p = hand_path(0.5, {0.0, 0.5, 1.0, 0.7});
  CHECK(first_passage(p, 0.9).hit);
  CHECK(first_passage(p, 0.9).time == 1.0);
  CHECK(first_passage(p, 0.0).time == 0.0);  // the origin counts
  CHECK(first_passage(p, -3.0).time == 0.0);
  CHECK(!first_passage(p, 2.0).hit);
}

TEST_CASE("subordinator: grid tags, monotonicity, and input validation") {
  const GridPath h = sample_subordinator({0.0, 0.5, 1.0, 2.5}, SeedSpec{609, 0});
  CHECK(h.kind == PathKind::subordinator);
  REQUIRE(h.size() == 4);
  CHECK(h.times == std::vector<double>{0.0, 0.5, 1.0, 2.5});
  CHECK(h.values[0] == 0.0);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h.values[i] > h.values[i - 1]);

  CHECK(error_code_of([] { sample_subordinator({1.0, 0.5}, SeedSpec{609, 1}); }) ==
        Errc::invalid_params);
  CHECK(error_code_of([] { sample_subordinator({-1.0, 0.5}, SeedSpec{609, 2}); }) ==
        Errc::invalid_params);
}

TEST_CASE("subordinator marginal matches the closed-form CDF") {
  CHECK(subordinator_marginal_cdf(1.0, 1.0) == 0.31731050786291415);
  CHECK(subordinator_marginal_cdf(1.0, 0.0) == 0.0);
  CHECK(subordinator_marginal_cdf(2.0, 1e8) > 0.999);
  // In t it is a CDF: nondecreasing toward 1.
  double prev = 0.0;
  for (double t = 0.125; t <= 1024.0; t *= 2.0) {
    const double c = subordinator_marginal_cdf(1.0, t);
    CHECK(c >= prev);
    prev = c;
  }

  const std::size_t draws = 100000;
  std::vector<double> h1, h2;
  for (std::size_t i = 0; i < draws; ++i) {
    const GridPath h = sample_subordinator({1.0, 2.0}, SeedSpec{610, i});
    h1.push_back(h.values[0]);
    h2.push_back(h.values[1]);
  }
  const KsResult ks =
      ks_one_sample(h1, [](double t) { return subordinator_marginal_cdf(1.0, t); });
  CHECK(ks.statistic <= 0.01);
  // Stable-1/2 scaling: H(2)/4 has the law of H(1).
  for (double& v : h2) v *= 0.25;
  const KsResult two = ks_two_sample(h1, h2);
  CHECK(two.statistic <= 0.012);
}

TEST_CASE("refining the driver grid tightens the solved endpoint") {
  // Couple three resolutions of the same driver path by subsampling, then
  // watch the solved endpoint converge as the grid refines.
  double coarse_err = 0.0, mid_err = 0.0;
  const std::size_t paths = 64;
  for (std::size_t i = 0; i < paths; ++i) {
    const GridPath fine = sample_bm(1e-4, 1.0, SeedSpec{611, i});
    GridPath mid = hand_path(1e-3, {});
    GridPath coarse = hand_path(1e-2, {});
    for (std::size_t k = 0; k < fine.size(); k += 10) mid.values.push_back(fine.values[k]);
    for (std::size_t k = 0; k < fine.size(); k += 100)
      coarse.values.push_back(fine.values[k]);
    const PbmParams params{0.6, -0.4};
    const double xf = solve_pbm(fine, params).values.back();
    const double xm = solve_pbm(mid, params).values.back();
    const double xc = solve_pbm(coarse, params).values.back();
    coarse_err += std::fabs(xc - xf);
    mid_err += std::fabs(xm - xf);
  }
  coarse_err /= double(paths);
  mid_err /= double(paths);
  CHECK(mid_err > 0.0);
  CHECK(coarse_err > 1.8 * mid_err);
}
