#pragma once

// Reference processes for the scaling limits: Brownian motion on a uniform
// grid, the (alpha, beta)-perturbed Brownian motion
//
//   X(t) = B(t) + alpha * max_{s<=t} X(s) + beta * min_{s<=t} X(s),
//
// its running maximum, and the stable-1/2 subordinator of Brownian first
// passage times.  For alpha, beta < 1 the perturbed equation has a unique
// pathwise solution; on a grid each step reduces to a one-dimensional fixed
// point with exactly one consistent case (interior, new maximum, or new
// minimum).
//
// The solver evaluates its update symmetrically, so the distributional
// symmetry "swap (alpha, beta) and negate the driver => negate the solution"
// holds bitwise on any driver, not just in law.

#include <cstddef>
#include <vector>

#include "erwlab/rng.hpp"

namespace erw {

// What a grid path represents; factories tag their output so downstream
// consumers can sanity-check what they were handed.
enum class PathKind { bm, pbm, runmax, subordinator };

// A path sampled on a time grid.  Uniform grids store dt with `times` empty;
// paths on explicit grids (subordinators over level sets) fill `times`.
struct GridPath {
  PathKind kind = PathKind::bm;
  double dt = 0.0;
  std::vector<double> times;   // empty for uniform grids
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double time_at(std::size_t i) const {
    return times.empty() ? dt * static_cast<double>(i) : times[i];
  }
};

struct PbmParams {
  double alpha = 0.0;  // weight on the running maximum
  double beta = 0.0;   // weight on the running minimum; both must be < 1
};

// Standard Brownian motion on {0, dt, 2dt, ..., ~horizon}: Gaussian
// increments via the inverse CDF on the gauss sub-stream of `seed`.
GridPath sample_bm(double dt, double horizon, SeedSpec seed);

// Solves the perturbed equation along the driver path (X(0) = 0).
GridPath solve_pbm(const GridPath& driver, PbmParams params);

// Running maximum of a path (same grid).
GridPath running_max(const GridPath& path);

// First grid time the path reaches `level` (values >= level), if any.
// Returns the time coordinate, not the index.
struct FirstPassage {
  bool hit = false;
  double time = 0.0;
};
FirstPassage first_passage(const GridPath& path, double level);

// Brownian first-passage subordinator H(x) = inf{t : B(t) = x} sampled at an
// increasing sequence of levels: independent stable-1/2 increments, each
// drawn as (dx)^2 / Z^2 with Z standard normal.
GridPath sample_subordinator(const std::vector<double>& levels, SeedSpec seed);

// P(H(x) <= t) = 2(1 - Phi(x / sqrt(t))); the marginal CDF of the
// subordinator at level x > 0.
double subordinator_marginal_cdf(double level, double t);

}  // namespace erw
