#include "erwlab/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "erwlab/error.hpp"

namespace erw {

double scale_factor(std::int64_t n, ScaleMode mode) {
  if (n < 1) throw Error(Errc::invalid_params, "scale_factor: n must be >= 1");
  if (mode == ScaleMode::diffusive) return std::sqrt(static_cast<double>(n));
  if (n < 2) throw Error(Errc::invalid_params, "scale_factor: boundary mode needs n >= 2");
  return std::sqrt(static_cast<double>(n)) * std::log(static_cast<double>(n));
}

namespace {

void require_trace(const WalkRun& run, const char* who) {
  if (!run.has_trace())
    throw Error(Errc::missing_trace, std::string(who) + ": run lacks per-step records");
}

void require_length(const WalkRun& run, std::int64_t n, const char* who) {
  if (n > run.steps)
    throw Error(Errc::run_too_short, std::string(who) + ": horizon exceeds recorded run");
}

}  // namespace

ScaledPath rescale(const WalkRun& run, std::int64_t n, ScaleMode mode,
                   double horizon, bool with_companions) {
  if (!(horizon > 0.0)) throw Error(Errc::invalid_params, "rescale: horizon must be > 0");
  const double s = scale_factor(n, mode);
  const auto points =
      static_cast<std::int64_t>(std::floor(static_cast<double>(n) * horizon));
  require_length(run, points, "rescale");
  if (points > 0) require_trace(run, "rescale");

  ScaledPath path;
  path.n = n;
  path.mode = mode;
  path.scale = s;
  path.times.resize(static_cast<std::size_t>(points) + 1);
  path.values.resize(static_cast<std::size_t>(points) + 1);
  if (with_companions) {
    path.running_max.resize(static_cast<std::size_t>(points) + 1);
    path.martingale_part.resize(static_cast<std::size_t>(points) + 1);
    path.drift_part.resize(static_cast<std::size_t>(points) + 1);
  }

  std::int64_t x = 0, max_pos = 0;
  double c = 0.0;
  for (std::int64_t k = 0; k <= points; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    path.times[idx] = static_cast<double>(k) / static_cast<double>(n);
    path.values[idx] = static_cast<double>(x) / s;
    if (with_companions) {
      path.running_max[idx] = static_cast<double>(max_pos) / s;
      path.drift_part[idx] = c / s;
      path.martingale_part[idx] = (static_cast<double>(x) - c) / s;
    }
    if (k < points) {
      c += run.conditional_drifts[idx];
      x += run.increments[idx];
      max_pos = std::max(max_pos, x);
    }
  }
  return path;
}

double drift_tracking(const WalkRun& run, std::int64_t n, double delta) {
  if (n < 1) throw Error(Errc::invalid_params, "drift_tracking: n must be >= 1");
  require_length(run, n, "drift_tracking");
  require_trace(run, "drift_tracking");

  std::int64_t x = 0, max_pos = 0, min_pos = 0;
  double c = 0.0;
  double sup = std::fabs(delta);  // k = 0 term: C_0 = 0, R_0 = 1
  for (std::int64_t k = 0; k < n; ++k) {
    c += run.conditional_drifts[static_cast<std::size_t>(k)];
    x += run.increments[static_cast<std::size_t>(k)];
    max_pos = std::max(max_pos, x);
    min_pos = std::min(min_pos, x);
    const double range = static_cast<double>(max_pos - min_pos + 1);
    sup = std::max(sup, std::fabs(c - delta * range));
  }
  return sup / std::sqrt(static_cast<double>(n));
}

double quad_var_defect(const WalkRun& run, std::int64_t n) {
  if (n < 1) throw Error(Errc::invalid_params, "quad_var_defect: n must be >= 1");
  require_length(run, n, "quad_var_defect");
  require_trace(run, "quad_var_defect");
  double sum = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double d = run.conditional_drifts[static_cast<std::size_t>(k)];
    sum += d * d;
  }
  return sum / static_cast<double>(n);
}

double quad_var_bound(const WalkRun& run, std::int64_t n, int cookies_per_site) {
  if (n < 1 || cookies_per_site < 1)
    throw Error(Errc::invalid_params, "quad_var_bound: bad parameters");
  require_length(run, n, "quad_var_bound");
  std::int64_t range;
  if (n == run.steps) {
    range = run.range();
  } else {
    require_trace(run, "quad_var_bound");
    std::int64_t x = 0, max_pos = 0, min_pos = 0;
    for (std::int64_t k = 0; k < n; ++k) {
      x += run.increments[static_cast<std::size_t>(k)];
      max_pos = std::max(max_pos, x);
      min_pos = std::min(min_pos, x);
    }
    range = max_pos - min_pos + 1;
  }
  return static_cast<double>(cookies_per_site) * static_cast<double>(range) /
         static_cast<double>(n);
}

std::int64_t backtrack(const WalkRun& run, std::int64_t n) {
  if (n < 0) throw Error(Errc::invalid_params, "backtrack: n must be >= 0");
  require_length(run, n, "backtrack");
  if (n == run.steps) return run.max_backtrack;
  require_trace(run, "backtrack");
  std::int64_t x = 0, max_pos = 0, bt = 0;
  for (std::int64_t k = 0; k < n; ++k) {
    x += run.increments[static_cast<std::size_t>(k)];
    max_pos = std::max(max_pos, x);
    bt = std::max(bt, max_pos - x);
  }
  return bt;
}

std::int64_t unvisited_cookie_count(const WalkRun& run, std::int64_t a,
                                    std::int64_t b, std::int64_t time,
                                    int cookies_per_site) {
  if (a > b) throw Error(Errc::invalid_params, "unvisited_cookie_count: a > b");
  if (cookies_per_site < 1)
    throw Error(Errc::invalid_params, "unvisited_cookie_count: bad cookie count");
  if (time < 0) throw Error(Errc::invalid_params, "unvisited_cookie_count: negative time");
  require_length(run, time, "unvisited_cookie_count");

  const auto m = static_cast<std::uint32_t>(cookies_per_site);
  std::int64_t count = 0;
  if (time == run.steps) {
    for (std::int64_t z = a; z <= b; ++z)
      if (run.local_times.at(z) < m) ++count;
    return count;
  }
  require_trace(run, "unvisited_cookie_count");
  // Visit counts (departures) strictly before `time`, replayed over the
  // run's full site range.
  std::vector<std::uint32_t> visits(static_cast<std::size_t>(run.range()), 0);
  std::int64_t x = 0;
  for (std::int64_t k = 0; k < time; ++k) {
    ++visits[static_cast<std::size_t>(x - run.running_min)];
    x += run.increments[static_cast<std::size_t>(k)];
  }
  for (std::int64_t z = a; z <= b; ++z) {
    std::uint32_t v = 0;
    if (z >= run.running_min && z <= run.running_max)
      v = visits[static_cast<std::size_t>(z - run.running_min)];
    if (v < m) ++count;
  }
  return count;
}

HitScaling hit_scaling(const CheckedLaw& law, SeedSpec seed, std::int64_t n,
                       std::span<const double> levels, std::int64_t step_cap) {
  if (n < 2) throw Error(Errc::invalid_params, "hit_scaling: n must be >= 2");
  if (levels.empty()) throw Error(Errc::invalid_params, "hit_scaling: no levels");
  if (std::fabs(law.delta() - 1.0) > 1e-9)
    throw Error(Errc::invalid_params, "hit_scaling: law must have delta = 1");
  double prev = 0.0;
  for (double x : levels) {
    if (!(x >= prev))
      throw Error(Errc::invalid_params, "hit_scaling: levels must be nondecreasing, >= 0");
    prev = x;
  }

  const double log_n = std::log(static_cast<double>(n));
  HitScaling out;
  out.n = n;
  out.time_scale = static_cast<double>(n) * static_cast<double>(n) / (log_n * log_n);
  out.levels.assign(levels.begin(), levels.end());
  out.scaled_times.assign(levels.size(), std::numeric_limits<double>::quiet_NaN());

  const auto top =
      static_cast<std::int64_t>(std::floor(static_cast<double>(n) * levels.back()));
  if (top == 0) {
    // All requested levels floor to site 0: T_0 = 0.
    std::fill(out.scaled_times.begin(), out.scaled_times.end(), 0.0);
    out.complete = true;
    return out;
  }

  const HitResult res = run_to_hit(law, seed, top, step_cap, RecordMode::summary);
  out.complete = res.hit_time.has_value();
  for (std::size_t j = 0; j < out.levels.size(); ++j) {
    const auto site = static_cast<std::int64_t>(
        std::floor(static_cast<double>(n) * out.levels[j]));
    const auto t = res.run.hitting_time(site);
    if (t) out.scaled_times[j] = static_cast<double>(*t) / out.time_scale;
  }
  return out;
}

}  // namespace erw
