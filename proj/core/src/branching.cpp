#include "erwlab/branching.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>
#include <vector>

#include "erwlab/error.hpp"
#include "erwlab/walk.hpp"

namespace erw {

std::int64_t negative_binomial_half(std::int64_t r, CounterRng& rng) {
  if (r <= 0) return 0;
  if (r <= 16) {
    // Direct coin flips: ~2r draws in expectation, cheaper than the
    // transformed samplers at small r.
    std::int64_t failures = 0, successes = 0;
    while (successes < r) {
      if (rng.next_u64() >> 63)
        ++successes;
      else
        ++failures;
    }
    return failures;
  }
  // NB(r, 1/2) is Poisson mixed over a Gamma(r, 1) rate.
  std::gamma_distribution<double> gamma(static_cast<double>(r), 1.0);
  std::poisson_distribution<std::int64_t> poisson(gamma(rng));
  return poisson(rng);
}

std::int64_t branch_step(const CheckedLaw& law, std::int64_t current, CounterRng& rng) {
  if (current < 0) throw Error(Errc::invalid_params, "branch_step: negative population");
  const int m = law.cookies_per_site();
  std::size_t atom = 0;
  if (law.atom_count() > 1) atom = law.pick_atom(rng.next_unit());

  std::int64_t need = current + 1;
  std::int64_t failures = 0;
  for (int i = 0; i < m; ++i) {
    if (rng.next_unit() < law.right_at(atom, i)) {
      if (--need == 0) return failures;
    } else {
      ++failures;
    }
  }
  return failures + negative_binomial_half(need, rng);
}

LifetimeSample sample_lifetime(const CheckedLaw& law, SeedSpec seed,
                               std::int64_t generation_cap, std::uint64_t progeny_cap) {
  if (generation_cap < 1)
    throw Error(Errc::invalid_params, "sample_lifetime: generation_cap must be >= 1");
  CounterRng rng(seed, Dom::excursion);
  LifetimeSample out;
  std::int64_t v = 0;
  for (std::int64_t k = 1; k <= generation_cap; ++k) {
    v = branch_step(law, v, rng);
    out.lifetime = k;
    if (v == 0) return out;
    out.progeny += static_cast<std::uint64_t>(v);
    if (out.progeny > progeny_cap) {
      out.censored = true;
      return out;
    }
  }
  out.censored = true;  // still alive at the generation cap
  return out;
}

TailFit fit_tail(std::span<const LifetimeSample> samples, TailField field,
                 TailTransform transform, double window_lo, double window_hi,
                 int grid_points, std::int64_t min_samples) {
  if (!(window_lo > 0.0) || !(window_hi > window_lo) || grid_points < 5)
    throw Error(Errc::invalid_params, "fit_tail: need 0 < window_lo < window_hi, >= 5 grid points");

  const auto value_of = [&](const LifetimeSample& s) {
    double v = (field == TailField::lifetime) ? static_cast<double>(s.lifetime)
                                              : static_cast<double>(s.progeny);
    if (transform == TailTransform::square_root) v = std::sqrt(v);
    return v;
  };

  std::int64_t uncensored = 0;
  double min_censor = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.censored)
      min_censor = std::min(min_censor, value_of(s));
    else
      ++uncensored;
  }
  if (uncensored < min_samples)
    throw Error(Errc::insufficient_data, "fit_tail: too few uncensored samples");
  if (min_censor <= window_hi)
    throw Error(Errc::range_beyond_censoring,
                "fit_tail: window reaches censored observations");

  // Exceedance values above the window floor.  Below every censor point the
  // censored samples are exact exceedances, so they are included.
  std::vector<double> tail;
  for (const auto& s : samples) {
    const double v = value_of(s);
    if (v > window_lo) tail.push_back(v);
  }
  const double n_total = static_cast<double>(samples.size());

  TailFit fit;
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;
  fit.tail_count = static_cast<std::int64_t>(tail.size());

  // Survival on a geometric grid.
  std::sort(tail.begin(), tail.end());
  std::vector<double> xs, ys;
  const double ratio = std::pow(window_hi / window_lo, 1.0 / double(grid_points - 1));
  double t = window_lo;
  for (int j = 0; j < grid_points; ++j, t *= ratio) {
    const auto it = std::upper_bound(tail.begin(), tail.end(), t);
    const double exceed = static_cast<double>(tail.end() - it);
    if (exceed <= 0.0) break;
    xs.push_back(std::log(t));
    ys.push_back(std::log(exceed / n_total));
  }
  if (xs.size() < 5)
    throw Error(Errc::insufficient_data, "fit_tail: survival empties inside the window");
  fit.grid_points_used = static_cast<int>(xs.size());

  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    mx += xs[j];
    my += ys[j];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sxx += (xs[j] - mx) * (xs[j] - mx);
    sxy += (xs[j] - mx) * (ys[j] - my);
  }
  const double slope = sxy / sxx;
  fit.exponent = -slope;
  fit.amplitude = std::exp(my - slope * mx);
  double ss_res = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double r = ys[j] - (my + slope * (xs[j] - mx));
    ss_res += r * r;
  }
  fit.std_error = std::sqrt(ss_res / (n - 2.0) / sxx);

  // Hill estimate over the same window (censored exceedances enter at their
  // censor values; they sit far above the window so the pull is negligible).
  double log_sum = 0.0;
  for (double v : tail) log_sum += std::log(v / window_lo);
  fit.hill_exponent = double(tail.size()) / log_sum;
  return fit;
}

DualityReport verify_duality(const CheckedLaw& law, int level,
                             std::int64_t samples_per_side, SeedSpec seed,
                             int coordinate_cap, std::int64_t walk_step_cap) {
  if (level < 1 || level > 8)
    throw Error(Errc::invalid_params, "verify_duality: level must be in [1,8]");
  if (samples_per_side < 2)
    throw Error(Errc::invalid_params, "verify_duality: need at least 2 samples per side");
  if (coordinate_cap < 1)
    throw Error(Errc::invalid_params, "verify_duality: coordinate_cap must be >= 1");

  const std::uint64_t base = static_cast<std::uint64_t>(coordinate_cap) + 2;
  std::uint64_t cells = 1;
  for (int j = 0; j < level; ++j) {
    cells *= base;
    if (cells > (std::uint64_t{1} << 26))
      throw Error(Errc::invalid_params, "verify_duality: truncated support too large");
  }

  const auto key_of = [&](const std::vector<std::int64_t>& coords) {
    std::uint64_t key = 0;
    for (int j = 0; j < level; ++j) {
      const std::uint64_t digit = static_cast<std::uint64_t>(
          std::min<std::int64_t>(coords[j], coordinate_cap + 1));
      key = key * base + digit;
    }
    return key;
  };

  DualityReport report;
  report.level = level;
  report.coordinate_cap = coordinate_cap;

  std::vector<double> walk_hist(cells, 0.0), branch_hist(cells, 0.0);
  std::vector<double> half_a(cells, 0.0), half_b(cells, 0.0);
  std::vector<double> wsum(level, 0.0), wsq(level, 0.0);
  std::vector<double> bsum(level, 0.0), bsq(level, 0.0);
  std::vector<std::int64_t> coords(level, 0);

  // Walk side: downcrossing counts below `level`, top down, skipping V_0
  // (identically zero on both sides).
  for (std::int64_t i = 0; i < samples_per_side; ++i) {
    const SeedSpec replica{seed.master, seed.stream + static_cast<std::uint64_t>(i)};
    HitResult res = run_to_hit(law, replica, level, walk_step_cap, RecordMode::full);
    if (!res.hit_time) {
      ++report.walk_timeouts;
      continue;
    }
    const Downcrossings d = downcrossings(res.run, level);
    for (int j = 1; j <= level; ++j) {
      coords[j - 1] = d.at(level - j);
      wsum[j - 1] += double(coords[j - 1]);
      wsq[j - 1] += double(coords[j - 1]) * double(coords[j - 1]);
    }
    walk_hist[key_of(coords)] += 1.0;
    ++report.walk_samples;
  }
  if (report.walk_samples == 0)
    throw Error(Errc::insufficient_data, "verify_duality: every walk run timed out");

  // Branching side: V_1..V_level on the excursion sub-stream of the same
  // replica seeds (independent of the walk noise by domain separation).
  for (std::int64_t i = 0; i < samples_per_side; ++i) {
    const SeedSpec replica{seed.master, seed.stream + static_cast<std::uint64_t>(i)};
    CounterRng rng(replica, Dom::excursion);
    std::int64_t v = 0;
    for (int j = 1; j <= level; ++j) {
      v = branch_step(law, v, rng);
      coords[j - 1] = v;
      bsum[j - 1] += double(v);
      bsq[j - 1] += double(v) * double(v);
    }
    const std::uint64_t key = key_of(coords);
    branch_hist[key] += 1.0;
    ((i & 1) ? half_a : half_b)[key] += 1.0;
    ++report.branch_samples;
  }

  const double nw = double(report.walk_samples);
  const double nb = double(report.branch_samples);
  double tv = 0.0;
  for (std::uint64_t c = 0; c < cells; ++c)
    tv += std::fabs(walk_hist[c] / nw - branch_hist[c] / nb);
  report.tv_distance = 0.5 * tv;

  const double na = double(samples_per_side - samples_per_side / 2);
  const double nbb = double(samples_per_side / 2);
  double tv_half = 0.0;
  for (std::uint64_t c = 0; c < cells; ++c)
    tv_half += std::fabs(half_a[c] / na - half_b[c] / nbb);
  report.tv_noise_floor = 0.5 * tv_half / std::sqrt(2.0);

  for (int j = 0; j < level; ++j) {
    const double mw = wsum[j] / nw;
    const double mb = bsum[j] / nb;
    const double vw = std::max(0.0, wsq[j] / nw - mw * mw);
    const double vb = std::max(0.0, bsq[j] / nb - mb * mb);
    report.walk_means.push_back(mw);
    report.branch_means.push_back(mb);
    report.diff_std_errors.push_back(std::sqrt(vw / nw + vb / nb));
  }
  return report;
}

}  // namespace erw
