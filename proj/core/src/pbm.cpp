#include "erwlab/pbm.hpp"

#include <cmath>

#include "erwlab/error.hpp"
#include "erwlab/stats.hpp"

namespace erw {

GridPath sample_bm(double dt, double horizon, SeedSpec seed) {
  if (!(dt > 0.0) || !(horizon > 0.0))
    throw Error(Errc::invalid_params, "sample_bm: dt and horizon must be positive");
  const auto steps = static_cast<std::int64_t>(std::llround(horizon / dt));
  if (steps < 1) throw Error(Errc::invalid_params, "sample_bm: horizon shorter than dt");

  CounterRng rng(seed, Dom::gauss);
  const double scale = std::sqrt(dt);
  GridPath path;
  path.kind = PathKind::bm;
  path.dt = dt;
  path.values.resize(static_cast<std::size_t>(steps) + 1);
  path.values[0] = 0.0;
  double b = 0.0;
  for (std::int64_t i = 1; i <= steps; ++i) {
    b += scale * normal_quantile(rng.next_unit());
    path.values[static_cast<std::size_t>(i)] = b;
  }
  return path;
}

GridPath solve_pbm(const GridPath& driver, PbmParams params) {
  if (!(params.alpha < 1.0) || !(params.beta < 1.0))
    throw Error(Errc::invalid_params, "solve_pbm: alpha and beta must be < 1");
  if (driver.values.empty())
    throw Error(Errc::invalid_params, "solve_pbm: empty driver");

  GridPath out;
  out.kind = PathKind::pbm;
  out.dt = driver.dt;
  out.times = driver.times;
  out.values.resize(driver.values.size());
  out.values[0] = 0.0;

  double max_v = 0.0, min_v = 0.0;
  for (std::size_t i = 1; i < driver.values.size(); ++i) {
    // Candidate assuming the extrema do not move.  The three cases are
    // mutually exclusive because g(x) = B + alpha*max(M,x) + beta*min(m,x)
    // has slope < 1 everywhere, so g has exactly one fixed point.
    const double base = driver.values[i] + (params.alpha * max_v + params.beta * min_v);
    double x;
    if (base > max_v) {
      x = (driver.values[i] + params.beta * min_v) / (1.0 - params.alpha);
      max_v = x;
    } else if (base < min_v) {
      x = (driver.values[i] + params.alpha * max_v) / (1.0 - params.beta);
      min_v = x;
    } else {
      x = base;
    }
    out.values[i] = x;
  }
  return out;
}

GridPath running_max(const GridPath& path) {
  GridPath out;
  out.kind = PathKind::runmax;
  out.dt = path.dt;
  out.times = path.times;
  out.values.resize(path.values.size());
  double m = path.values.empty() ? 0.0 : path.values[0];
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    if (path.values[i] > m) m = path.values[i];
    out.values[i] = m;
  }
  return out;
}

FirstPassage first_passage(const GridPath& path, double level) {
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    if (path.values[i] >= level) return {true, path.time_at(i)};
  }
  return {false, 0.0};
}

GridPath sample_subordinator(const std::vector<double>& levels, SeedSpec seed) {
  if (levels.empty())
    throw Error(Errc::invalid_params, "sample_subordinator: no levels");
  double prev = 0.0;
  for (double x : levels) {
    if (!(x >= prev))
      throw Error(Errc::invalid_params, "sample_subordinator: levels must be nondecreasing and >= 0");
    prev = x;
  }

  CounterRng rng(seed, Dom::subordinator);
  GridPath path;
  path.kind = PathKind::subordinator;
  path.times = levels;
  path.values.resize(levels.size());
  double h = 0.0;
  prev = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const double dx = levels[j] - prev;
    if (dx > 0.0) {
      const double z = normal_quantile(rng.next_unit());  // never exactly 0
      h += dx * dx / (z * z);
    }
    path.values[j] = h;
    prev = levels[j];
  }
  return path;
}

double subordinator_marginal_cdf(double level, double t) {
  if (!(level > 0.0)) throw Error(Errc::invalid_params, "subordinator_marginal_cdf: level must be > 0");
  if (t <= 0.0) return 0.0;
  return 2.0 * (1.0 - normal_cdf(level / std::sqrt(t)));
}

}  // namespace erw
