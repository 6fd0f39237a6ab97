// Statistical toolkit against independently computed reference values
// (normal CDF/quantile, Kolmogorov and chi-square distributions) and
// hand-evaluated KS / quantile examples.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "erwlab/error.hpp"
#include "erwlab/rng.hpp"
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

}  // namespace

TEST_CASE("normal_cdf matches frozen double-precision references") {
  CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-15));
  CHECK(normal_cdf(0.5) == doctest::Approx(0.69146246127401312).epsilon(1e-15));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.84134474606854293).epsilon(1e-15));
  CHECK(normal_cdf(2.0) == doctest::Approx(0.97724986805182079).epsilon(1e-15));
  CHECK(normal_cdf(-3.0) == doctest::Approx(0.0013498980316300933).epsilon(1e-14));
  CHECK(normal_cdf(0.0) == 0.5);
  for (double x : {0.1, 0.7, 1.3, 2.9, 4.2})
    CHECK(normal_cdf(-x) + normal_cdf(x) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("normal_quantile matches frozen references and inverts the CDF") {
  CHECK(normal_quantile(0.625) == doctest::Approx(0.31863936396437514).epsilon(1e-13));
  CHECK(normal_quantile(0.75) == doctest::Approx(0.67448975019608171).epsilon(1e-13));
  CHECK(normal_quantile(0.875) == doctest::Approx(1.1503493803760079).epsilon(1e-13));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  CHECK(normal_quantile(0.99) == doctest::Approx(2.3263478740408408).epsilon(1e-13));
  CHECK(normal_quantile(1e-9) == doctest::Approx(-5.9978070150076865).epsilon(1e-12));
  for (double p : {0.001, 0.1, 0.3, 0.5, 0.77, 0.999})
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));
  CHECK(error_code_of([] { normal_quantile(0.0); }) == Errc::out_of_range);
  CHECK(error_code_of([] { normal_quantile(1.0); }) == Errc::out_of_range);
}

TEST_CASE("half_normal_cdf is 2*Phi - 1 on x >= 0 and zero below") {
  CHECK(half_normal_cdf(-0.5) == 0.0);
  CHECK(half_normal_cdf(0.0) == 0.0);
  // Quartiles of |Z| sit at the 0.625 / 0.875 normal quantiles.
  CHECK(half_normal_cdf(0.31863936396437514) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(half_normal_cdf(1.1503493803760079) == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(half_normal_cdf(2.0) == doctest::Approx(2.0 * 0.97724986805182079 - 1.0).epsilon(1e-15));
}

TEST_CASE("kolmogorov survival function and critical values") {
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.63) == doctest::Approx(0.009846364888486529).epsilon(1e-12));
  CHECK(kolmogorov_sf(0.8) > kolmogorov_sf(1.2));
  CHECK(kolmogorov_critical(0.01) == doctest::Approx(1.6276236115189502).epsilon(1e-9));
  for (double alpha : {0.2, 0.05, 0.01})
    CHECK(kolmogorov_sf(kolmogorov_critical(alpha)) == doctest::Approx(alpha).epsilon(1e-9));
}

TEST_CASE("incomplete gamma and chi-square survival") {
  CHECK(gamma_p(0.5, 1.0) == doctest::Approx(0.8427007929497148).epsilon(1e-12));
  CHECK(gamma_q(3.0, 2.5) == doctest::Approx(0.5438131158833297).epsilon(1e-12));
  for (double a : {0.5, 1.0, 4.0})
    for (double x : {0.2, 1.0, 7.0})
      CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(chi_square_sf(3.0, 2.0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-13));
  CHECK(chi_square_sf(25.0, 15.0) == doctest::Approx(0.0499434336264283).epsilon(1e-11));
}

TEST_CASE("type-7 quantiles on hand examples") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(xs, 0.0) == 1.0);
  CHECK(quantile(xs, 1.0) == 4.0);
  CHECK(quantile(xs, 0.5) == 2.5);
  CHECK(quantile(xs, 0.25) == 1.75);
  const std::vector<double> odd{3.0, 1.0, 2.0};
  CHECK(median(odd) == 2.0);
  CHECK(error_code_of([&] { quantile(xs, 1.5); }) == Errc::out_of_range);
  CHECK(error_code_of([] { median(std::vector<double>{}); }) == Errc::empty_sample);
}

TEST_CASE("mean and variance basics") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(xs) == 2.5);
  CHECK(variance(xs) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  const std::vector<double> flat{2.0, 2.0, 2.0};
  CHECK(variance(flat) == 0.0);
}

TEST_CASE("Ecdf step function and quantiles") {
  Ecdf f({1.0, 2.0, 2.0, 4.0});
  CHECK(f(0.9) == 0.0);
  CHECK(f(1.0) == 0.25);
  CHECK(f(2.0) == 0.75);
  CHECK(f(3.99) == 0.75);
  CHECK(f(4.0) == 1.0);
  CHECK(f.quantile(0.5) == 2.0);
  CHECK(error_code_of([] { Ecdf(std::vector<double>{}); }) == Errc::empty_sample);
}

TEST_CASE("two-sample KS: identical, disjoint, and the hand case") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, a).p_value == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> lo{0.0, 0.1, 0.2}, hi{5.0, 6.0, 7.0};
  CHECK(ks_two_sample(lo, hi).statistic == 1.0);
  // The step functions differ only on [4,5), where F_a has reached 1 while
  // F_b still sits at 3/4.
  const std::vector<double> b{1.0, 2.0, 3.0, 5.0};
  CHECK(ks_two_sample(a, b).statistic == 0.25);
  const std::vector<double> empty;
  CHECK(error_code_of([&] { ks_two_sample(empty, a); }) == Errc::empty_sample);
}

TEST_CASE("one-sample KS: quantile-grid construction meets the 1/n bound") {
  const int n = 1000;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i)
    xs[static_cast<std::size_t>(i)] = normal_quantile((i + 0.5) / n);
  const KsResult r = ks_one_sample(xs, [](double x) { return normal_cdf(x); });
  CHECK(r.statistic <= 1.0 / n + 1e-12);
}

TEST_CASE("one-sample KS flags mass below the half-normal support") {
  const std::vector<double> xs{-0.5, 0.3};
  const KsResult r = ks_one_sample(xs, [](double x) { return half_normal_cdf(x); });
  CHECK(r.statistic >= 0.5);
}

TEST_CASE("100k pseudo-normal draws pass KS against the normal oracle") {
  CounterRng rng(SeedSpec{314, 0}, Dom::gauss);
  std::vector<double> xs(100000);
  for (double& x : xs) x = normal_quantile(rng.next_unit());
  const KsResult r = ks_one_sample(xs, [](double x) { return normal_cdf(x); });
  CHECK(r.statistic <= 0.006);
}
