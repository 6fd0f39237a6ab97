#pragma once

// Distribution-free test statistics and reference distributions used by the
// verification experiments: empirical CDFs, one- and two-sample
// Kolmogorov-Smirnov tests, order-statistic quantiles, and high-accuracy
// normal CDF / quantile evaluations.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace erw {

// ---- scalar distributions ---------------------------------------------------

// Standard normal CDF, accurate to full double precision (erfc based).
double normal_cdf(double x);

// Standard normal quantile (inverse CDF) for p in (0,1); rational
// approximation accurate to ~1e-16 relative error.  Throws Errc::out_of_range
// outside (0,1).
double normal_quantile(double p);

// CDF of |Z| for Z standard normal (zero for x < 0).
double half_normal_cdf(double x);

// Survival function of the Kolmogorov distribution,
//   Q(t) = 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2),
// evaluated in whichever theta-series converges fast at t.
double kolmogorov_sf(double t);

// Upper critical value: smallest t with kolmogorov_sf(t) <= alpha.
double kolmogorov_critical(double alpha);

// Regularized lower incomplete gamma P(a,x) and its complement Q(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, double df);

// ---- sample summaries -------------------------------------------------------

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // unbiased, n-1 denominator

// Order-statistic quantile with linear interpolation (the common "type 7"
// rule: h = (n-1)q, interpolate between the floor(h)-th and next order
// statistic).  q must lie in [0,1]; the sample is copied, not reordered.
double quantile(std::span<const double> xs, double q);
double median(std::span<const double> xs);

// Empirical CDF over a sample; owns a sorted copy.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> sample);  // throws Errc::empty_sample

  double operator()(double x) const;   // fraction of sample <= x
  double quantile(double q) const;     // type-7, same rule as erw::quantile
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// ---- Kolmogorov-Smirnov -----------------------------------------------------

struct KsResult {
  double statistic = 0.0;  // sup-distance between the compared CDFs
  double n_eff = 0.0;      // n (one-sample) or n*m/(n+m) (two-sample)
  double p_value = 1.0;    // asymptotic, kolmogorov_sf(sqrt(n_eff)*statistic)
};

// Two-sample KS: sup |F_a - F_b| over the pooled sample, ties handled by
// comparing only at points where both step functions have settled.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// One-sample KS against a continuous reference CDF.
KsResult ks_one_sample(std::span<const double> xs,
                       const std::function<double(double)>& cdf);

}  // namespace erw
