#include "erwlab/walk.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>

#include "erwlab/error.hpp"

namespace erw {

namespace {

// Growable array indexed by site (negative indices allowed).  Backed by two
// vectors; libstdc++ grows them geometrically under resize, and the walk only
// extends its range one site at a time.
template <class T>
class SiteArray {
 public:
  explicit SiteArray(T init) : init_(init) {}

  T& at(std::int64_t z) {
    if (z >= 0) {
      const auto idx = static_cast<std::size_t>(z);
      if (idx >= nonneg_.size()) nonneg_.resize(idx + 1, init_);
      return nonneg_[idx];
    }
    const auto idx = static_cast<std::size_t>(-(z + 1));
    if (idx >= neg_.size()) neg_.resize(idx + 1, init_);
    return neg_[idx];
  }

 private:
  std::vector<T> nonneg_, neg_;
  T init_;
};

constexpr std::int64_t kMaxTrace = std::int64_t{1} << 31;

// Shared simulation state for the fixed-horizon and first-passage drivers.
struct Kernel {
  const CheckedLaw& law;
  std::uint64_t env_base;
  std::uint64_t walk_base;
  RecordMode mode;

  std::uint32_t m;
  bool single_atom;

  SiteArray<std::uint32_t> visits{0};  // true visit (departure) counts
  SiteArray<std::int16_t> atom{-1};    // cached environment draw per site

  std::int64_t x = 0, t = 0;
  std::int64_t max_pos = 0, min_pos = 0;
  std::int64_t max_backtrack = 0;
  std::int64_t first_return = -1;
  std::vector<std::int64_t> hits_right, hits_left;
  std::vector<std::int8_t> increments;
  std::vector<double> drifts;

  Kernel(const CheckedLaw& l, SeedSpec env_seed, SeedSpec noise_seed, RecordMode md)
      : law(l),
        env_base(CheckedLaw::environment_base(env_seed)),
        walk_base(stream_base(noise_seed, Dom::walk)),
        mode(md),
        m(static_cast<std::uint32_t>(l.cookies_per_site())),
        single_atom(l.atom_count() == 1) {}

  void step() {
    std::uint32_t& count = visits.at(x);
    const std::uint32_t c = count++;
    double p_right = 0.5;
    double drift = 0.0;
    if (c < m) {
      std::size_t a = 0;
      if (!single_atom) {
        std::int16_t& cached = atom.at(x);
        if (cached < 0) cached = static_cast<std::int16_t>(law.sample_atom(env_base, x));
        a = static_cast<std::size_t>(cached);
      }
      p_right = law.right_at(a, static_cast<int>(c));
      drift = law.drift_at(a, static_cast<int>(c));
    }
    const bool right = to_unit(keyed_u64(walk_base, zigzag(x), c)) < p_right;
    if (mode == RecordMode::full) {
      increments.push_back(right ? std::int8_t{1} : std::int8_t{-1});
      drifts.push_back(drift);
    }
    x += right ? 1 : -1;
    ++t;
    if (x > max_pos) {
      max_pos = x;
      hits_right.push_back(t);
    } else if (x < min_pos) {
      min_pos = x;
      hits_left.push_back(t);
    }
    max_backtrack = std::max(max_backtrack, max_pos - x);
    if (x == 0 && first_return < 0) first_return = t;
  }

  WalkRun finish() {
    WalkRun run;
    run.steps = t;
    run.position = x;
    run.running_max = max_pos;
    run.running_min = min_pos;
    run.max_backtrack = max_backtrack;
    run.first_return = first_return;
    run.hits_right = std::move(hits_right);
    run.hits_left = std::move(hits_left);
    run.local_times.lowest = min_pos;
    run.local_times.counts.resize(static_cast<std::size_t>(max_pos - min_pos + 1));
    for (std::int64_t z = min_pos; z <= max_pos; ++z)
      run.local_times.counts[static_cast<std::size_t>(z - min_pos)] = visits.at(z);
    run.increments = std::move(increments);
    run.conditional_drifts = std::move(drifts);
    return run;
  }
};

}  // namespace

std::vector<std::int64_t> WalkRun::positions() const {
  if (!has_trace())
    throw Error(Errc::missing_trace, "positions: run lacks per-step records");
  std::vector<std::int64_t> xs(static_cast<std::size_t>(steps) + 1);
  xs[0] = 0;
  for (std::int64_t k = 0; k < steps; ++k)
    xs[static_cast<std::size_t>(k + 1)] =
        xs[static_cast<std::size_t>(k)] + increments[static_cast<std::size_t>(k)];
  return xs;
}

std::vector<double> WalkRun::drift_part() const {
  if (!has_trace())
    throw Error(Errc::missing_trace, "drift_part: run lacks per-step records");
  std::vector<double> c(static_cast<std::size_t>(steps) + 1);
  c[0] = 0.0;
  for (std::int64_t k = 0; k < steps; ++k)
    c[static_cast<std::size_t>(k + 1)] =
        c[static_cast<std::size_t>(k)] + conditional_drifts[static_cast<std::size_t>(k)];
  return c;
}

std::vector<double> WalkRun::martingale_part() const {
  const std::vector<std::int64_t> xs = positions();
  std::vector<double> b = drift_part();
  for (std::size_t k = 0; k < b.size(); ++k)
    b[k] = static_cast<double>(xs[k]) - b[k];
  return b;
}

std::optional<std::int64_t> WalkRun::hitting_time(std::int64_t level) const {
  if (level == 0) return 0;
  const auto& hits = (level > 0) ? hits_right : hits_left;
  const auto idx = static_cast<std::size_t>(level > 0 ? level : -level) - 1;
  if (idx >= hits.size()) return std::nullopt;
  return hits[idx];
}

WalkRun run_fixed_quenched(const CheckedLaw& law, SeedSpec environment_seed,
                           SeedSpec noise_seed, std::int64_t n, RecordMode mode) {
  if (n < 0) throw Error(Errc::invalid_params, "run_fixed: negative horizon");
  if (mode == RecordMode::full && n > kMaxTrace)
    throw Error(Errc::invalid_params, "run_fixed: horizon too large for full traces");
  Kernel k(law, environment_seed, noise_seed, mode);
  if (mode == RecordMode::full) {
    k.increments.reserve(static_cast<std::size_t>(n));
    k.drifts.reserve(static_cast<std::size_t>(n));
  }
  while (k.t < n) k.step();
  return k.finish();
}

WalkRun run_fixed(const CheckedLaw& law, SeedSpec seed, std::int64_t n, RecordMode mode) {
  return run_fixed_quenched(law, seed, seed, n, mode);
}

HitResult run_to_hit_quenched(const CheckedLaw& law, SeedSpec environment_seed,
                              SeedSpec noise_seed, std::int64_t target,
                              std::int64_t step_cap, RecordMode mode) {
  if (target == 0) throw Error(Errc::invalid_params, "run_to_hit: target must be nonzero");
  const std::int64_t dist = target > 0 ? target : -target;
  if (step_cap < dist)
    throw Error(Errc::invalid_params, "run_to_hit: step cap smaller than |target|");
  if (mode == RecordMode::full && step_cap > kMaxTrace)
    throw Error(Errc::invalid_params, "run_to_hit: step cap too large for full traces");
  Kernel k(law, environment_seed, noise_seed, mode);
  while (k.t < step_cap && k.x != target) k.step();
  HitResult result;
  if (k.x == target) result.hit_time = k.t;
  result.run = k.finish();
  return result;
}

HitResult run_to_hit(const CheckedLaw& law, SeedSpec seed, std::int64_t target,
                     std::int64_t step_cap, RecordMode mode) {
  return run_to_hit_quenched(law, seed, seed, target, step_cap, mode);
}

HitResult run_to_return(const CheckedLaw& law, SeedSpec seed, std::int64_t step_cap,
                        RecordMode mode) {
  if (step_cap < 2)
    throw Error(Errc::invalid_params, "run_to_return: step cap must be at least 2");
  if (mode == RecordMode::full && step_cap > kMaxTrace)
    throw Error(Errc::invalid_params, "run_to_return: step cap too large for full traces");
  Kernel k(law, seed, seed, mode);
  while (k.t < step_cap && k.first_return < 0) k.step();
  HitResult result;
  if (k.first_return >= 0) result.hit_time = k.first_return;
  result.run = k.finish();
  return result;
}

std::int64_t Downcrossings::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

Downcrossings downcrossings(const WalkRun& run, std::int64_t level) {
  const auto hit = run.hitting_time(level);
  if (!hit) throw Error(Errc::missing_hit, "downcrossings: run never hit the level");
  if (!run.has_trace())
    throw Error(Errc::missing_trace, "downcrossings: run lacks per-step records");
  const std::int64_t T = *hit;

  std::int64_t x = 0, lowest = 0;
  for (std::int64_t j = 0; j < T; ++j) {
    x += run.increments[static_cast<std::size_t>(j)];
    lowest = std::min(lowest, x);
  }

  Downcrossings d;
  d.level = level;
  d.lowest = lowest;
  d.counts.assign(static_cast<std::size_t>(level - lowest + 1), 0);
  x = 0;
  for (std::int64_t j = 0; j < T; ++j) {
    const std::int8_t inc = run.increments[static_cast<std::size_t>(j)];
    if (inc < 0) ++d.counts[static_cast<std::size_t>(x - lowest)];
    x += inc;
  }
  return d;
}

ExactPmf exact_pmf(const CheckedLaw& law, int n) {
  if (n < 0) throw Error(Errc::invalid_params, "exact_pmf: negative horizon");
  if (n > 14)
    throw Error(Errc::horizon_too_large, "exact_pmf: horizon capped at 14 (2^n paths)");

  const int m = law.cookies_per_site();
  const std::size_t atoms = law.atom_count();

  // terms[b] collects the probabilities of every path ending at x = 2b - n.
  // Each bin is sorted before summation and each path's site factors are
  // multiplied in first-visit order, which makes the result invariant under
  // path reflection (the mirror identity then holds bitwise).
  std::vector<std::vector<double>> terms(static_cast<std::size_t>(n) + 1);

  std::array<std::uint32_t, 29> dir_mask{};  // per site: visit directions, LSB first
  std::array<std::uint8_t, 29> visit_count{};
  std::array<int, 15> first_visit_order{};

  const std::uint32_t path_count = std::uint32_t{1} << n;
  for (std::uint32_t mask = 0; mask < path_count; ++mask) {
    int x = 0;
    int touched = 0;
    for (int j = 0; j < n; ++j) {
      const int idx = x + n;
      if (visit_count[idx] == 0) first_visit_order[touched++] = idx;
      const std::uint32_t right = (mask >> j) & 1u;
      dir_mask[idx] |= right << visit_count[idx];
      ++visit_count[idx];
      x += right ? 1 : -1;
    }

    double path_prob = 1.0;
    for (int s = 0; s < touched; ++s) {
      const int idx = first_visit_order[s];
      const int v = visit_count[idx];
      const std::uint32_t dm = dir_mask[idx];
      double site_factor = 0.0;
      for (std::size_t a = 0; a < atoms; ++a) {
        double prod = law.weight(a);
        const CookieStack& stack = law.stack(a);
        for (int i = 0; i < v; ++i) {
          const bool right = (dm >> i) & 1u;
          prod *= (i < m) ? (right ? stack.right(i) : stack.left(i)) : 0.5;
        }
        site_factor += prod;
      }
      path_prob *= site_factor;
      visit_count[idx] = 0;
      dir_mask[idx] = 0;
    }
    terms[static_cast<std::size_t>((x + n) / 2)].push_back(path_prob);
  }

  ExactPmf out;
  out.horizon = n;
  for (int b = 0; b <= n; ++b) {
    auto& bin = terms[static_cast<std::size_t>(b)];
    std::sort(bin.begin(), bin.end());
    double sum = 0.0;
    for (double term : bin) sum += term;
    out.probabilities[2 * b - n] = sum;
  }
  return out;
}

}  // namespace erw
