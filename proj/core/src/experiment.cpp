#include "erwlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "erwlab/branching.hpp"
#include "erwlab/cookie_law.hpp"
#include "erwlab/error.hpp"
#include "erwlab/pbm.hpp"
#include "erwlab/scaling.hpp"
#include "erwlab/stats.hpp"
#include "erwlab/svg.hpp"
#include "erwlab/walk.hpp"

namespace fs = std::filesystem;

namespace erw {
namespace {

using json = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Frozen reference quantities (inverse-CDF values of the limit laws).
constexpr double kHalfNormalMedian = 0.67448975019608171;     // Phi^-1(0.75)
constexpr double kHalfNormalQuartileRatio = 3.610192306637357;  // Phi^-1(7/8)/Phi^-1(5/8)
constexpr double kInverseChiSqMedian = 2.1981093383177326;    // median of 1/Z^2
constexpr double kInverseChiSqQuartileRatio = 13.033488490903562;

// Replica stream layout: every batch of draws inside one experiment gets its
// own block of stream ids so batches never share a counter stream.
constexpr std::uint64_t kStreamBlock = std::uint64_t{1} << 33;

std::uint64_t block_stream(int block, std::int64_t i) {
  return static_cast<std::uint64_t>(block) * kStreamBlock +
         static_cast<std::uint64_t>(i);
}

// ---- worker pool ------------------------------------------------------------

// Runs body(0..count-1), spread over `workers` threads.  Replicas are handed
// out through a shared counter and each call writes only its own slot, so
// results cannot depend on the worker count.
void parallel_for(std::int64_t count, int workers,
                  const std::function<void(std::int64_t)>& body) {
  if (count <= 0) return;
  const int use = static_cast<int>(
      std::min<std::int64_t>(std::max(workers, 1), count));
  if (use == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto drain = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(use));
  for (int t = 0; t < use; ++t) pool.emplace_back(drain);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- file helpers -----------------------------------------------------------

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(Errc::bad_config, "cannot open for writing: " + path.string());
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- small numerics ---------------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  LineFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

// Quantile-grid ECDF curve for plotting (about `points` (x, F) pairs).
std::vector<std::pair<double, double>> ecdf_curve(std::span<const double> sample,
                                                  int points = 257) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(points));
  const auto n = static_cast<std::int64_t>(sorted.size());
  for (int k = 0; k < points; ++k) {
    const double q = static_cast<double>(k) / (points - 1);
    auto idx = static_cast<std::int64_t>(q * static_cast<double>(n - 1));
    idx = std::clamp<std::int64_t>(idx, 0, n - 1);
    const double x = sorted[static_cast<std::size_t>(idx)];
    if (!std::isfinite(x)) continue;
    out.emplace_back(x, static_cast<double>(idx + 1) / static_cast<double>(n));
  }
  return out;
}

void write_xy_csv(const fs::path& path, const std::string& xname,
                  const std::string& yname,
                  const std::vector<std::pair<double, double>>& rows) {
  auto out = open_text(path);
  out << xname << ',' << yname << '\n';
  for (const auto& [x, y] : rows) out << fmt(x) << ',' << fmt(y) << '\n';
}

// ---- thresholds and checks --------------------------------------------------

class Thresholds {
 public:
  Thresholds(ExperimentId id, const std::map<std::string, double>& overrides)
      : values_(default_thresholds(id)) {
    for (const auto& [name, value] : overrides) {
      auto it = values_.find(name);
      if (it == values_.end())
        throw Error(Errc::bad_config, "unknown threshold '" + name +
                                          "' for experiment " + to_string(id));
      it->second = value;
    }
  }

  double at(const std::string& name) const { return values_.at(name); }
  const std::map<std::string, double>& all() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

struct CheckRecorder {
  std::vector<CheckOutcome> checks;

  bool add(std::string name, double value, double threshold,
           std::string relation) {
    bool pass = std::isfinite(value);
    if (pass) {
      if (relation == "<=") pass = value <= threshold;
      else if (relation == "<") pass = value < threshold;
      else if (relation == ">=") pass = value >= threshold;
      else if (relation == "==") pass = value == threshold;
      else pass = false;
    }
    checks.push_back({std::move(name), value, threshold, std::move(relation), pass});
    return pass;
  }

  bool add_le(std::string name, double value, double threshold) {
    return add(std::move(name), value, threshold, "<=");
  }
  // Relative error |value/target - 1| against a tolerance.
  bool add_rel(std::string name, double value, double target, double tol) {
    return add(std::move(name), std::fabs(value / target - 1.0), tol, "<=");
  }
  bool add_flag(std::string name, bool ok) {
    return add(std::move(name), ok ? 1.0 : 0.0, 1.0, "==");
  }
};

struct Ctx {
  const ExperimentConfig& cfg;
  const CheckedLaw* law;  // null for pbm_self
  const Thresholds& thr;
  json& stats;
  CheckRecorder& rec;
  fs::path out;

  fs::path samples(const std::string& name) const { return out / "samples" / name; }
  fs::path plots(const std::string& name) const { return out / "plots" / name; }
};

// ---- shared walk batches ----------------------------------------------------

struct RunStat {
  std::int64_t x = 0;
  std::int64_t max = 0;
  std::int64_t min = 0;
  std::int64_t backtrack = 0;
  std::int64_t first_return = -1;
};

std::vector<RunStat> fixed_run_batch(const Ctx& ctx, std::int64_t n,
                                     int stream_block) {
  std::vector<RunStat> out(static_cast<std::size_t>(ctx.cfg.replicas));
  parallel_for(ctx.cfg.replicas, ctx.cfg.workers, [&](std::int64_t i) {
    const WalkRun run =
        run_fixed(*ctx.law, SeedSpec{ctx.cfg.master_seed, block_stream(stream_block, i)},
                  n, RecordMode::summary);
    out[static_cast<std::size_t>(i)] =
        RunStat{run.position, run.running_max, run.running_min,
                run.max_backtrack, run.first_return};
  });
  return out;
}

void write_run_csv(const Ctx& ctx, const std::string& name, std::int64_t n,
                   const std::vector<RunStat>& runs) {
  auto out = open_text(ctx.samples(name));
  out << "stream,n,x_n,max,min,backtrack,first_return\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RunStat& r = runs[i];
    out << i << ',' << n << ',' << r.x << ',' << r.max << ',' << r.min << ','
        << r.backtrack << ',' << r.first_return << '\n';
  }
}

void dump_trajectories(const Ctx& ctx, std::int64_t n, int stream_block) {
  const std::int64_t k = std::min(ctx.cfg.trajectory_dumps, ctx.cfg.replicas);
  for (std::int64_t i = 0; i < k; ++i) {
    const WalkRun run =
        run_fixed(*ctx.law, SeedSpec{ctx.cfg.master_seed, block_stream(stream_block, i)},
                  n, RecordMode::full);
    const auto xs = run.positions();
    auto out = open_text(ctx.samples("trajectory_" + std::to_string(i) + ".csv"));
    out << "step,x\n";
    for (std::size_t j = 0; j < xs.size(); ++j) out << j << ',' << xs[j] << '\n';
  }
}

// max / (-min) with IEEE division: a path pinned at or above 0 gives +inf,
// which medians over replicas absorb.
double updown_ratio(double max_v, double min_v) { return max_v / -min_v; }

// ---- THEOREM1: diffusive limit ---------------------------------------------

void run_theorem1(Ctx& ctx) {
  const double delta = ctx.law->delta();
  const bool centered = std::fabs(delta) < 1e-12;

  // Reference sample for delta != 0: the perturbed process driven by
  // discretized Brownian motion, one path per walk replica.
  std::vector<double> ref_x1, ref_ratio;
  if (!centered) {
    const std::int64_t paths = ctx.cfg.replicas;
    ref_x1.resize(static_cast<std::size_t>(paths));
    ref_ratio.resize(static_cast<std::size_t>(paths));
    const PbmParams params{delta, -delta};
    parallel_for(paths, ctx.cfg.workers, [&](std::int64_t i) {
      const GridPath b = sample_bm(
          ctx.cfg.dt, 1.0, SeedSpec{ctx.cfg.master_seed, block_stream(1, i)});
      const GridPath x = solve_pbm(b, params);
      const auto [lo, hi] = std::minmax_element(x.values.begin(), x.values.end());
      ref_x1[static_cast<std::size_t>(i)] = x.values.back();
      ref_ratio[static_cast<std::size_t>(i)] = updown_ratio(*hi, *lo);
    });
  }

  json by_n = json::array();
  double top_ks = kInf;
  double top_walk_ratio = kInf, ref_ratio_median = kInf;
  for (std::size_t ni = 0; ni < ctx.cfg.n_values.size(); ++ni) {
    const std::int64_t n = ctx.cfg.n_values[ni];
    const auto runs = fixed_run_batch(ctx, n, 0);
    write_run_csv(ctx, "runs_" + std::to_string(n) + ".csv", n, runs);

    const double s = scale_factor(n, ScaleMode::diffusive);
    std::vector<double> scaled(runs.size()), ratio(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
      scaled[i] = static_cast<double>(runs[i].x) / s;
      ratio[i] = updown_ratio(static_cast<double>(runs[i].max),
                              static_cast<double>(runs[i].min));
    }

    KsResult ks;
    if (centered) {
      ks = ks_one_sample(scaled, [](double x) { return normal_cdf(x); });
    } else {
      ks = ks_two_sample(scaled, ref_x1);
    }
    const double ratio_med = median(ratio);

    json row;
    row["n"] = n;
    row["mean_scaled"] = mean(scaled);
    row["variance_scaled"] = variance(scaled);
    row["ks_statistic"] = ks.statistic;
    row["ks_p_value"] = ks.p_value;
    row["updown_ratio_median"] = ratio_med;
    by_n.push_back(std::move(row));

    const bool top = ni + 1 == ctx.cfg.n_values.size();
    if (top) {
      top_ks = ks.statistic;
      top_walk_ratio = ratio_med;
      write_xy_csv(ctx.plots("ecdf_walk_" + std::to_string(n) + ".csv"), "x",
                   "F", ecdf_curve(scaled));

      std::vector<std::pair<double, double>> ref_curve;
      if (centered) {
        for (int k = 0; k <= 256; ++k) {
          const double x = -4.0 + 8.0 * k / 256.0;
          ref_curve.emplace_back(x, normal_cdf(x));
        }
      } else {
        ref_curve = ecdf_curve(ref_x1);
      }
      write_xy_csv(ctx.plots("ecdf_reference.csv"), "x", "F", ref_curve);

      SvgSeries walk_series{"walk X_n / sqrt(n)", ecdf_curve(scaled), true};
      SvgSeries ref_series{centered ? "N(0,1)" : "perturbed BM", ref_curve, true};
      write_svg_plot(ctx.plots("marginal_" + std::to_string(n) + ".svg"),
                     "Scaled marginal at n = " + std::to_string(n),
                     {walk_series, ref_series}, "x", "F");
    }
  }
  ctx.stats["by_n"] = std::move(by_n);
  ctx.stats["reference"] = centered ? "normal" : "perturbed_bm";

  if (centered) {
    ctx.rec.add_le("ks_normal", top_ks, ctx.thr.at("ks_normal"));
  } else {
    ref_ratio_median = median(ref_ratio);
    ctx.stats["reference_updown_ratio_median"] = ref_ratio_median;
    ctx.rec.add_le("ks_pbm", top_ks, ctx.thr.at("ks_pbm"));
    ctx.rec.add_rel("asymmetry_gap", top_walk_ratio, ref_ratio_median,
                    ctx.thr.at("asymmetry_gap"));
  }

  if (ctx.cfg.trajectory_dumps > 0)
    dump_trajectories(ctx, ctx.cfg.n_values.back(), 0);
}

// ---- THEOREM2: boundary case delta = 1 -------------------------------------

void run_theorem2(Ctx& ctx) {
  const double neg_level = ctx.thr.at("neg_level");

  json by_n = json::array();
  std::vector<double> neg_fracs;
  double top_ratio = kInf, top_bt_ratio = kInf;
  for (std::size_t ni = 0; ni < ctx.cfg.n_values.size(); ++ni) {
    const std::int64_t n = ctx.cfg.n_values[ni];
    const auto runs = fixed_run_batch(ctx, n, static_cast<int>(ni));
    write_run_csv(ctx, "runs_" + std::to_string(n) + ".csv", n, runs);

    const double s = scale_factor(n, ScaleMode::boundary);
    std::vector<double> scaled(runs.size()), bt(runs.size()), mx(runs.size());
    std::int64_t below = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      scaled[i] = static_cast<double>(runs[i].x) / s;
      bt[i] = static_cast<double>(runs[i].backtrack) / s;
      mx[i] = static_cast<double>(runs[i].max) / s;
      if (scaled[i] < neg_level) ++below;
    }
    const double frac = static_cast<double>(below) / static_cast<double>(runs.size());
    neg_fracs.push_back(frac);
    const double q25 = quantile(scaled, 0.25), q75 = quantile(scaled, 0.75);
    const double med_bt = median(bt), med_mx = median(mx);

    json row;
    row["n"] = n;
    row["negative_fraction"] = frac;
    row["q25_scaled"] = q25;
    row["q75_scaled"] = q75;
    row["quartile_ratio"] = q75 / q25;
    row["median_backtrack_scaled"] = med_bt;
    row["median_max_scaled"] = med_mx;
    by_n.push_back(std::move(row));

    if (ni + 1 == ctx.cfg.n_values.size()) {
      top_ratio = q75 / q25;
      top_bt_ratio = med_bt / med_mx;

      // Shape-only comparison plot: the limit is an unknown multiple of the
      // running max of BM, so normalize both CDFs by their medians.
      const double med = median(scaled);
      std::vector<double> norm(scaled);
      for (double& v : norm) v /= med;
      std::vector<std::pair<double, double>> half;
      for (int k = 0; k <= 256; ++k) {
        const double x = 4.0 * k / 256.0;
        half.emplace_back(x, half_normal_cdf(x * kHalfNormalMedian));
      }
      write_xy_csv(ctx.plots("ecdf_scaled_" + std::to_string(n) + ".csv"), "x",
                   "F", ecdf_curve(norm));
      write_xy_csv(ctx.plots("half_normal_reference.csv"), "x", "F", half);
      write_svg_plot(ctx.plots("boundary_marginal_" + std::to_string(n) + ".svg"),
                     "X_n / (sqrt(n) log n), median-normalized, n = " +
                         std::to_string(n),
                     {SvgSeries{"walk", ecdf_curve(norm), true},
                      SvgSeries{"running-max law", half, true}},
                     "x / median", "F");
    }
  }
  ctx.stats["by_n"] = std::move(by_n);

  ctx.rec.add_le("negativity", neg_fracs.back(), ctx.thr.at("negativity"));
  ctx.rec.add_le("negativity_decay",
                 neg_fracs.back() - neg_fracs[neg_fracs.size() - 2], 0.0);
  ctx.rec.add_rel("quantile_ratio_gap", top_ratio, kHalfNormalQuartileRatio,
                  ctx.thr.at("quantile_ratio_gap"));
  ctx.rec.add_le("backtrack_ratio", top_bt_ratio, ctx.thr.at("backtrack_ratio"));

  if (ctx.cfg.trajectory_dumps > 0)
    dump_trajectories(ctx, ctx.cfg.n_values.back(),
                      static_cast<int>(ctx.cfg.n_values.size()) - 1);
}

// ---- DUAL: downcrossings vs branching --------------------------------------

void run_dual(Ctx& ctx) {
  const auto level = static_cast<int>(ctx.cfg.n_values.front());
  const std::int64_t cap = ctx.cfg.step_cap > 0 ? ctx.cfg.step_cap : 1000000;
  const DualityReport rep =
      verify_duality(*ctx.law, level, ctx.cfg.replicas,
                     SeedSpec{ctx.cfg.master_seed, 0},
                     ctx.cfg.dual_coordinate_cap, cap);

  json coords = json::array();
  double max_z = 0.0;
  for (std::size_t j = 0; j < rep.walk_means.size(); ++j) {
    const double diff = rep.walk_means[j] - rep.branch_means[j];
    const double se = rep.diff_std_errors[j];
    const double z = diff == 0.0 ? 0.0 : std::fabs(diff) / se;
    max_z = std::max(max_z, z);
    json row;
    row["coordinate"] = j + 1;
    row["walk_mean"] = rep.walk_means[j];
    row["branch_mean"] = rep.branch_means[j];
    row["diff_std_error"] = se;
    row["z"] = z;
    coords.push_back(std::move(row));
  }
  ctx.stats["level"] = rep.level;
  ctx.stats["coordinate_cap"] = rep.coordinate_cap;
  ctx.stats["tv_distance"] = rep.tv_distance;
  ctx.stats["tv_noise_floor"] = rep.tv_noise_floor;
  ctx.stats["walk_samples"] = rep.walk_samples;
  ctx.stats["branch_samples"] = rep.branch_samples;
  ctx.stats["walk_timeouts"] = rep.walk_timeouts;
  ctx.stats["coordinates"] = std::move(coords);

  {
    auto out = open_text(ctx.samples("coordinate_means.csv"));
    out << "coordinate,walk_mean,branch_mean,diff_std_error\n";
    for (std::size_t j = 0; j < rep.walk_means.size(); ++j)
      out << (j + 1) << ',' << fmt(rep.walk_means[j]) << ','
          << fmt(rep.branch_means[j]) << ',' << fmt(rep.diff_std_errors[j])
          << '\n';
  }
  {
    std::vector<std::pair<double, double>> w, b;
    for (std::size_t j = 0; j < rep.walk_means.size(); ++j) {
      w.emplace_back(static_cast<double>(j + 1), rep.walk_means[j]);
      b.emplace_back(static_cast<double>(j + 1), rep.branch_means[j]);
    }
    write_svg_plot(ctx.plots("coordinate_means.svg"),
                   "Downcrossing vs branching means, level " +
                       std::to_string(level),
                   {SvgSeries{"walk downcrossings", w, false},
                    SvgSeries{"branching process", b, false}},
                   "coordinate", "mean");
  }

  ctx.rec.add_le("tv", rep.tv_distance, ctx.thr.at("tv"));
  ctx.rec.add_le("mean_gap_z", max_z, ctx.thr.at("mean_gap_z"));
}

// ---- TAILS: lifetime / progeny exponents -----------------------------------

json tail_fit_json(const TailFit& f) {
  json j;
  j["exponent"] = f.exponent;
  j["amplitude"] = f.amplitude;
  j["std_error"] = f.std_error;
  j["hill_exponent"] = f.hill_exponent;
  j["window"] = {f.window_lo, f.window_hi};
  j["grid_points_used"] = f.grid_points_used;
  j["tail_count"] = f.tail_count;
  return j;
}

void write_excursion_csv(const Ctx& ctx, const std::string& name,
                         const std::vector<LifetimeSample>& xs) {
  auto out = open_text(ctx.samples(name));
  out << "stream,lifetime,progeny,censored\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << i << ',' << xs[i].lifetime << ',' << xs[i].progeny << ','
        << (xs[i].censored ? 1 : 0) << '\n';
}

// Survival curve of `values` (sorted ascending) on a geometric grid, for the
// log-log plots.
std::vector<std::pair<double, double>> survival_curve(std::vector<double> values,
                                                      double lo, double hi,
                                                      int points) {
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> out;
  const double step = std::log(hi / lo) / (points - 1);
  for (int k = 0; k < points; ++k) {
    const double t = lo * std::exp(step * k);
    const auto above = values.end() -
                       std::upper_bound(values.begin(), values.end(), t);
    const double s = static_cast<double>(above) / static_cast<double>(values.size());
    if (s <= 0.0) break;
    out.emplace_back(std::log10(t), std::log10(s));
  }
  return out;
}

void run_tails(Ctx& ctx) {
  const double delta = ctx.law->delta();
  if (delta <= 0.1)
    throw Error(Errc::bad_config,
                "tails experiment needs a law with delta > 0.1 (polynomial "
                "tails); got delta = " + std::to_string(delta));

  const std::int64_t r = ctx.cfg.replicas;

  // Lifetime batch: censor by generation only, just past the fit window, so
  // every censored lifetime sits above it.
  std::vector<LifetimeSample> life(static_cast<std::size_t>(r));
  parallel_for(r, ctx.cfg.workers, [&](std::int64_t i) {
    life[static_cast<std::size_t>(i)] =
        sample_lifetime(*ctx.law, SeedSpec{ctx.cfg.master_seed, block_stream(0, i)},
                        20000);
  });

  // Progeny batch: censor by progeny just past the window; the generation cap
  // is a backstop that can only trip once progeny >= cap - 1 (each surviving
  // generation contributes at least one), i.e. far above the window too.
  std::vector<LifetimeSample> prog(static_cast<std::size_t>(r));
  parallel_for(r, ctx.cfg.workers, [&](std::int64_t i) {
    prog[static_cast<std::size_t>(i)] =
        sample_lifetime(*ctx.law, SeedSpec{ctx.cfg.master_seed, block_stream(1, i)},
                        10000000, 100000000);
  });

  // Synthetic Pareto batches with known exponents calibrate the fitter.
  const auto pareto_batch = [&](int block, double alpha) {
    std::vector<LifetimeSample> xs(static_cast<std::size_t>(r));
    parallel_for(r, ctx.cfg.workers, [&](std::int64_t i) {
      CounterRng rng(SeedSpec{ctx.cfg.master_seed, block_stream(block, i)},
                     Dom::excursion);
      double v = 1000.0 * std::pow(rng.next_unit(), -1.0 / alpha);
      v = std::min(v, 9.0e18);
      xs[static_cast<std::size_t>(i)] = LifetimeSample{std::llround(v), 0, false};
    });
    return xs;
  };
  const auto pareto_half = pareto_batch(2, 0.5);
  const auto pareto_unit = pareto_batch(3, 1.0);

  const TailFit sigma_fit =
      fit_tail(life, TailField::lifetime, TailTransform::identity, 1e2, 1e4);
  const TailFit progeny_fit = fit_tail(prog, TailField::progeny,
                                       TailTransform::square_root, 1e2, 3e3);
  const TailFit cal_half = fit_tail(pareto_half, TailField::lifetime,
                                    TailTransform::identity, 1e3, 1e5);
  const TailFit cal_unit = fit_tail(pareto_unit, TailField::lifetime,
                                    TailTransform::identity, 1e3, 1e5);

  ctx.stats["delta"] = delta;
  ctx.stats["lifetime_fit"] = tail_fit_json(sigma_fit);
  ctx.stats["sqrt_progeny_fit"] = tail_fit_json(progeny_fit);
  ctx.stats["pareto_calibration_half"] = tail_fit_json(cal_half);
  ctx.stats["pareto_calibration_unit"] = tail_fit_json(cal_unit);

  write_excursion_csv(ctx, "excursions_lifetime.csv", life);
  write_excursion_csv(ctx, "excursions_progeny.csv", prog);

  const auto curve_and_fit = [&](const std::vector<LifetimeSample>& xs,
                                 bool sqrt_progeny, const TailFit& f,
                                 const std::string& name,
                                 const std::string& title) {
    std::vector<double> vals;
    vals.reserve(xs.size());
    for (const auto& s : xs)
      vals.push_back(sqrt_progeny
                         ? std::sqrt(static_cast<double>(s.progeny))
                         : static_cast<double>(s.lifetime));
    const auto emp = survival_curve(std::move(vals), f.window_lo,
                                    f.window_hi, 40);
    std::vector<std::pair<double, double>> fitline;
    for (const auto& [lt, ls] : emp) {
      (void)ls;
      fitline.emplace_back(lt, std::log10(f.amplitude) - f.exponent * lt);
    }
    write_xy_csv(ctx.plots(name + ".csv"), "log10_t", "log10_survival", emp);
    write_svg_plot(ctx.plots(name + ".svg"), title,
                   {SvgSeries{"empirical", emp, true},
                    SvgSeries{"power-law fit", fitline, true}},
                   "log10 t", "log10 P(> t)");
  };
  curve_and_fit(life, false, sigma_fit, "tail_lifetime", "Lifetime tail");
  curve_and_fit(prog, true, progeny_fit, "tail_sqrt_progeny",
                "sqrt(progeny) tail");

  ctx.rec.add_le("sigma_exponent_err", std::fabs(sigma_fit.exponent - delta),
                 ctx.thr.at("sigma_exponent_err"));
  ctx.rec.add_le("sqrt_progeny_exponent_err",
                 std::fabs(progeny_fit.exponent - delta),
                 ctx.thr.at("sqrt_progeny_exponent_err"));
  ctx.rec.add_le("pareto_half_err", std::fabs(cal_half.exponent - 0.5),
                 ctx.thr.at("pareto_half_err"));
  ctx.rec.add_le("pareto_unit_err", std::fabs(cal_unit.exponent - 1.0),
                 ctx.thr.at("pareto_unit_err"));
}

// ---- EATALL: unspent cookies at T_n ----------------------------------------

void run_eatall(Ctx& ctx) {
  const std::int64_t n_top = ctx.cfg.n_values.back();
  const int m = ctx.law->cookies_per_site();

  json by_n = json::array();
  std::vector<double> log_n, log_mean;
  for (std::size_t ni = 0; ni < ctx.cfg.n_values.size(); ++ni) {
    const std::int64_t n = ctx.cfg.n_values[ni];
    // First passage of n takes about n^2 steps; smaller levels are cheap, so
    // give them proportionally more replicas for balanced noise.
    const std::int64_t reps =
        std::min(ctx.cfg.replicas * (n_top / n), 50 * ctx.cfg.replicas);
    const std::int64_t cap =
        ctx.cfg.step_cap > 0 ? ctx.cfg.step_cap : 6 * n * n;

    std::vector<std::int64_t> counts(static_cast<std::size_t>(reps), -1);
    parallel_for(reps, ctx.cfg.workers, [&](std::int64_t i) {
      const HitResult hr = run_to_hit(
          *ctx.law,
          SeedSpec{ctx.cfg.master_seed, block_stream(static_cast<int>(ni), i)},
          n, cap);
      if (!hr.hit_time) return;  // leave -1: censored
      counts[static_cast<std::size_t>(i)] =
          unvisited_cookie_count(hr.run, 0, n - 1, hr.run.steps, m);
    });

    std::vector<double> kept;
    std::int64_t timeouts = 0;
    for (const std::int64_t c : counts) {
      if (c < 0) ++timeouts;
      else kept.push_back(static_cast<double>(c));
    }
    const double mu = kept.empty() ? std::nan("") : mean(kept);

    {
      auto out = open_text(ctx.samples("counts_" + std::to_string(n) + ".csv"));
      out << "stream,n,unspent_sites\n";
      for (std::size_t i = 0; i < counts.size(); ++i)
        out << i << ',' << n << ',' << counts[i] << '\n';
    }

    json row;
    row["n"] = n;
    row["replicas"] = reps;
    row["timeouts"] = timeouts;
    row["mean_count"] = mu;
    row["median_count"] = kept.empty() ? std::nan("") : median(kept);
    by_n.push_back(std::move(row));
    if (mu > 0.0) {
      log_n.push_back(std::log(static_cast<double>(n)));
      log_mean.push_back(std::log(mu));
    }
  }
  ctx.stats["by_n"] = std::move(by_n);

  double slope = std::nan("");
  if (log_n.size() >= 2) slope = fit_line(log_n, log_mean).slope;
  ctx.stats["growth_slope"] = slope;

  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < log_n.size(); ++i)
    pts.emplace_back(log_n[i] / std::log(10.0), log_mean[i] / std::log(10.0));
  write_xy_csv(ctx.plots("eatall_means.csv"), "log10_n", "log10_mean_count", pts);
  write_svg_plot(ctx.plots("eatall_means.svg"),
                 "Sites with unspent cookies at T_n",
                 {SvgSeries{"mean count", pts, true}}, "log10 n", "log10 mean");

  ctx.rec.add("growth_slope", slope, ctx.thr.at("growth_slope"), "<");
}

// ---- RANGE: P(T_n <= n^2 / L) monotone in L --------------------------------

void run_range(Ctx& ctx) {
  const std::int64_t n = ctx.cfg.n_values.front();
  const std::int64_t cap = n * n;
  static constexpr std::int64_t kSpeedups[] = {1, 4, 16, 64};

  std::vector<std::int64_t> times(static_cast<std::size_t>(ctx.cfg.replicas), -1);
  parallel_for(ctx.cfg.replicas, ctx.cfg.workers, [&](std::int64_t i) {
    const HitResult hr = run_to_hit(
        *ctx.law, SeedSpec{ctx.cfg.master_seed, block_stream(0, i)}, n, cap);
    if (hr.hit_time) times[static_cast<std::size_t>(i)] = *hr.hit_time;
  });

  {
    auto out = open_text(ctx.samples("hit_times.csv"));
    out << "stream,n,t_n\n";
    for (std::size_t i = 0; i < times.size(); ++i)
      out << i << ',' << n << ',' << times[i] << '\n';
  }

  json rows = json::array();
  std::vector<double> fracs;
  std::vector<std::pair<double, double>> pts;
  for (const std::int64_t speedup : kSpeedups) {
    const std::int64_t budget = cap / speedup;
    std::int64_t hit = 0;
    for (const std::int64_t t : times)
      if (t >= 0 && t <= budget) ++hit;
    const double frac =
        static_cast<double>(hit) / static_cast<double>(times.size());
    fracs.push_back(frac);
    json row;
    row["speedup"] = speedup;
    row["budget"] = budget;
    row["fraction"] = frac;
    rows.push_back(std::move(row));
    pts.emplace_back(std::log2(static_cast<double>(speedup)), frac);
  }
  ctx.stats["n"] = n;
  ctx.stats["fractions"] = std::move(rows);

  bool monotone = true;
  for (std::size_t i = 1; i < fracs.size(); ++i)
    if (fracs[i] > fracs[i - 1]) monotone = false;

  write_xy_csv(ctx.plots("range_fractions.csv"), "log2_speedup", "fraction", pts);
  write_svg_plot(ctx.plots("range_fractions.svg"),
                 "P(T_n <= n^2 / L) at n = " + std::to_string(n),
                 {SvgSeries{"fraction", pts, true}}, "log2 L", "fraction");

  ctx.rec.add_flag("monotone", monotone);
}

// ---- QUADVAR: quadratic-variation defect -----------------------------------

void run_quadvar(Ctx& ctx) {
  const int m = ctx.law->cookies_per_site();

  json by_n = json::array();
  double top_median = kInf;
  std::int64_t violations_total = 0;
  for (std::size_t ni = 0; ni < ctx.cfg.n_values.size(); ++ni) {
    const std::int64_t n = ctx.cfg.n_values[ni];
    std::vector<double> defects(static_cast<std::size_t>(ctx.cfg.replicas));
    std::vector<double> bounds(static_cast<std::size_t>(ctx.cfg.replicas));
    std::atomic<std::int64_t> violations{0};
    parallel_for(ctx.cfg.replicas, ctx.cfg.workers, [&](std::int64_t i) {
      const WalkRun run = run_fixed(
          *ctx.law,
          SeedSpec{ctx.cfg.master_seed, block_stream(static_cast<int>(ni), i)},
          n, RecordMode::full);
      const double d = quad_var_defect(run, n);
      const double b = quad_var_bound(run, n, m);
      defects[static_cast<std::size_t>(i)] = d;
      bounds[static_cast<std::size_t>(i)] = b;
      if (d > b) violations.fetch_add(1, std::memory_order_relaxed);
    });

    {
      auto out = open_text(ctx.samples("defects_" + std::to_string(n) + ".csv"));
      out << "stream,n,defect,bound\n";
      for (std::size_t i = 0; i < defects.size(); ++i)
        out << i << ',' << n << ',' << fmt(defects[i]) << ',' << fmt(bounds[i])
            << '\n';
    }

    json row;
    row["n"] = n;
    row["median_defect"] = median(defects);
    row["median_bound"] = median(bounds);
    row["bound_violations"] = violations.load();
    by_n.push_back(std::move(row));

    violations_total += violations.load();
    if (ni + 1 == ctx.cfg.n_values.size()) top_median = median(defects);
  }
  ctx.stats["by_n"] = std::move(by_n);

  ctx.rec.add_le("median_defect", top_median, ctx.thr.at("median_defect"));
  ctx.rec.add("bound_violations", static_cast<double>(violations_total), 0.0,
              "==");

  if (ctx.cfg.trajectory_dumps > 0)
    dump_trajectories(ctx, ctx.cfg.n_values.back(),
                      static_cast<int>(ctx.cfg.n_values.size()) - 1);
}

// ---- BACKTRACK: S_n - X_n under boundary scaling ---------------------------

void run_backtrack(Ctx& ctx) {
  json by_n = json::array();
  double top_ratio = kInf;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t ni = 0; ni < ctx.cfg.n_values.size(); ++ni) {
    const std::int64_t n = ctx.cfg.n_values[ni];
    const auto runs = fixed_run_batch(ctx, n, static_cast<int>(ni));
    write_run_csv(ctx, "runs_" + std::to_string(n) + ".csv", n, runs);

    const double s = scale_factor(n, ScaleMode::boundary);
    std::vector<double> bt(runs.size()), mx(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
      bt[i] = static_cast<double>(runs[i].backtrack) / s;
      mx[i] = static_cast<double>(runs[i].max) / s;
    }
    const double med_bt = median(bt), med_mx = median(mx);
    const double ratio = med_bt / med_mx;

    json row;
    row["n"] = n;
    row["median_backtrack_scaled"] = med_bt;
    row["median_max_scaled"] = med_mx;
    row["ratio"] = ratio;
    by_n.push_back(std::move(row));
    pts.emplace_back(std::log10(static_cast<double>(n)), ratio);
    if (ni + 1 == ctx.cfg.n_values.size()) top_ratio = ratio;
  }
  ctx.stats["by_n"] = std::move(by_n);

  write_xy_csv(ctx.plots("backtrack_ratio.csv"), "log10_n", "ratio", pts);
  write_svg_plot(ctx.plots("backtrack_ratio.svg"),
                 "median backtrack / median running max, boundary scaling",
                 {SvgSeries{"ratio", pts, true}}, "log10 n", "ratio");

  ctx.rec.add_le("backtrack_ratio", top_ratio, ctx.thr.at("backtrack_ratio"));
}

// ---- FDD: hitting times vs the stable-1/2 subordinator ---------------------

void run_fdd(Ctx& ctx) {
  const std::int64_t n = ctx.cfg.n_values.back();
  const double ln = std::log(static_cast<double>(n));
  const double time_scale = static_cast<double>(n) * static_cast<double>(n) /
                            (ln * ln);
  const std::vector<double> levels{1.0};

  // The scaled hitting time has a one-sided stable tail, so a fixed generous
  // cap wastes most of the budget on a few runs.  Unless the config pins a
  // cap, a short pilot estimates the median and the main batch caps at 12x
  // that; capped runs enter the quantiles as +infinity, which is harmless
  // while the censored fraction stays below a quarter.
  std::int64_t cap = ctx.cfg.step_cap;
  double pilot_median = std::nan("");
  if (cap <= 0) {
    const std::int64_t pilot_reps = 200;
    const auto pilot_cap = static_cast<std::int64_t>(
        std::llround(32.0 * time_scale));
    std::vector<double> pilot(static_cast<std::size_t>(pilot_reps));
    parallel_for(pilot_reps, ctx.cfg.workers, [&](std::int64_t i) {
      const HitScaling h = hit_scaling(
          *ctx.law, SeedSpec{ctx.cfg.master_seed, block_stream(2, i)}, n,
          levels, pilot_cap);
      pilot[static_cast<std::size_t>(i)] =
          h.complete ? h.scaled_times.back() : kInf;
    });
    pilot_median = median(pilot);
    if (!std::isfinite(pilot_median))
      throw Error(Errc::run_too_short,
                  "fdd pilot censored past the median; raise step_cap");
    cap = std::max<std::int64_t>(
        static_cast<std::int64_t>(std::llround(12.0 * pilot_median * time_scale)),
        4 * n);
  }

  std::vector<double> scaled(static_cast<std::size_t>(ctx.cfg.replicas));
  parallel_for(ctx.cfg.replicas, ctx.cfg.workers, [&](std::int64_t i) {
    const HitScaling h = hit_scaling(
        *ctx.law, SeedSpec{ctx.cfg.master_seed, block_stream(0, i)}, n, levels,
        cap);
    scaled[static_cast<std::size_t>(i)] =
        h.complete ? h.scaled_times.back() : kInf;
  });

  std::int64_t censored = 0;
  for (const double v : scaled)
    if (!std::isfinite(v)) ++censored;
  const double frac_censored =
      static_cast<double>(censored) / static_cast<double>(scaled.size());
  const double q25 = quantile(scaled, 0.25);
  const double q75 = quantile(scaled, 0.75);
  const double med = median(scaled);

  // Independent draws from the limit law for the distributional check.
  const std::int64_t sub_reps = 100000;
  std::vector<double> sub(static_cast<std::size_t>(sub_reps));
  parallel_for(sub_reps, ctx.cfg.workers, [&](std::int64_t i) {
    sub[static_cast<std::size_t>(i)] =
        sample_subordinator(levels,
                            SeedSpec{ctx.cfg.master_seed, block_stream(1, i)})
            .values.back();
  });
  const KsResult sub_ks = ks_one_sample(
      sub, [](double t) { return subordinator_marginal_cdf(1.0, t); });

  ctx.stats["n"] = n;
  ctx.stats["time_scale"] = time_scale;
  ctx.stats["step_cap"] = cap;
  ctx.stats["pilot_median"] = pilot_median;
  ctx.stats["censored_fraction"] = frac_censored;
  ctx.stats["q25"] = q25;
  ctx.stats["q75"] = q75;
  ctx.stats["median"] = med;
  ctx.stats["quartile_ratio"] = q75 / q25;
  ctx.stats["subordinator_ks"] = sub_ks.statistic;

  {
    auto out = open_text(ctx.samples("hit_times.csv"));
    out << "stream,n,scaled_time,censored\n";
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      out << i << ',' << n << ',';
      if (std::isfinite(scaled[i])) out << fmt(scaled[i]);
      out << ',' << (std::isfinite(scaled[i]) ? 0 : 1) << '\n';
    }
  }
  {
    // Shape comparison: both CDFs normalized by their medians (the walk's
    // limit is an unknown multiple of the subordinator marginal).
    std::vector<double> norm;
    for (const double v : scaled)
      if (std::isfinite(v)) norm.push_back(v / med);
    std::sort(norm.begin(), norm.end());
    std::vector<std::pair<double, double>> emp;
    const int points = 257;
    for (int k = 0; k < points; ++k) {
      const auto idx = static_cast<std::size_t>(
          static_cast<double>(k) / (points - 1) *
          static_cast<double>(norm.size() - 1));
      emp.emplace_back(norm[idx], static_cast<double>(idx + 1) /
                                      static_cast<double>(scaled.size()));
    }
    std::vector<std::pair<double, double>> ref;
    for (int k = 1; k <= 256; ++k) {
      const double t = 20.0 * k / 256.0;
      ref.emplace_back(t, subordinator_marginal_cdf(1.0, t * kInverseChiSqMedian));
    }
    write_xy_csv(ctx.plots("ecdf_hit_normalized.csv"), "t_over_median", "F", emp);
    write_xy_csv(ctx.plots("subordinator_reference.csv"), "t_over_median", "F", ref);
    write_svg_plot(ctx.plots("hitting_marginal.svg"),
                   "T(1) scaled, median-normalized, n = " + std::to_string(n),
                   {SvgSeries{"walk hitting time", emp, true},
                    SvgSeries{"subordinator marginal", ref, true}},
                   "t / median", "F");
  }

  ctx.rec.add_le("censoring", frac_censored, ctx.thr.at("censoring"));
  ctx.rec.add_rel("quantile_ratio_gap", q75 / q25, kInverseChiSqQuartileRatio,
                  ctx.thr.at("quantile_ratio_gap"));
  ctx.rec.add_le("subordinator_cdf_sup", sub_ks.statistic,
                 ctx.thr.at("subordinator_cdf_sup"));
}

// ---- PBM_SELF: reference-solver self-checks --------------------------------

void run_pbm_self(Ctx& ctx) {
  const std::int64_t r = ctx.cfg.replicas;

  // Main batch: unperturbed solve must reproduce the driver bitwise; its
  // endpoint is N(0,1) and its running max is half-normal.
  std::vector<double> x1(static_cast<std::size_t>(r)), bstar(static_cast<std::size_t>(r));
  std::atomic<std::int64_t> identity_fails{0};
  parallel_for(r, ctx.cfg.workers, [&](std::int64_t i) {
    const GridPath b = sample_bm(ctx.cfg.dt, 1.0,
                                 SeedSpec{ctx.cfg.master_seed, block_stream(0, i)});
    const GridPath x = solve_pbm(b, PbmParams{0.0, 0.0});
    if (x.values != b.values)
      identity_fails.fetch_add(1, std::memory_order_relaxed);
    x1[static_cast<std::size_t>(i)] = b.values.back();
    bstar[static_cast<std::size_t>(i)] =
        *std::max_element(b.values.begin(), b.values.end());
  });
  const KsResult ks_norm =
      ks_one_sample(x1, [](double t) { return normal_cdf(t); });
  const KsResult ks_half =
      ks_one_sample(bstar, [](double t) { return half_normal_cdf(t); });

  // Subordinator: marginal CDF at level 1 and the stable scaling H(2) = 4 H(1)
  // in law (independent streams on both sides).
  std::vector<double> h1(static_cast<std::size_t>(r)), h2(static_cast<std::size_t>(r));
  parallel_for(r, ctx.cfg.workers, [&](std::int64_t i) {
    h1[static_cast<std::size_t>(i)] =
        sample_subordinator({1.0},
                            SeedSpec{ctx.cfg.master_seed, block_stream(1, i)})
            .values.back();
    h2[static_cast<std::size_t>(i)] =
        sample_subordinator({2.0},
                            SeedSpec{ctx.cfg.master_seed, block_stream(2, i)})
            .values.back() /
        4.0;
  });
  const KsResult sub_ks = ks_one_sample(
      h1, [](double t) { return subordinator_marginal_cdf(1.0, t); });
  const KsResult selfsim_ks = ks_two_sample(h1, h2);

  // Residuals of the defining equation across a spread of (alpha, beta).
  double residual_max = 0.0;
  static constexpr PbmParams kParamGrid[] = {
      {0.5, -0.5}, {0.9, 0.5}, {-0.5, 0.25}, {0.99, -3.0}};
  for (std::size_t p = 0; p < std::size(kParamGrid); ++p) {
    for (std::int64_t j = 0; j < 8; ++j) {
      const GridPath b = sample_bm(
          1e-3, 1.0,
          SeedSpec{ctx.cfg.master_seed,
                   block_stream(3, static_cast<std::int64_t>(p) * 8 + j)});
      const GridPath x = solve_pbm(b, kParamGrid[p]);
      double max_v = 0.0, min_v = 0.0;
      for (std::size_t i = 0; i < x.values.size(); ++i) {
        max_v = std::max(max_v, x.values[i]);
        min_v = std::min(min_v, x.values[i]);
        const double res =
            x.values[i] - (b.values[i] + kParamGrid[p].alpha * max_v +
                           kParamGrid[p].beta * min_v);
        residual_max = std::max(residual_max, std::fabs(res));
      }
    }
  }

  // Swap-and-negate symmetry, bitwise on a sampled driver.
  bool symmetry_ok = true;
  for (std::int64_t j = 0; j < 4; ++j) {
    const GridPath b = sample_bm(
        1e-3, 1.0, SeedSpec{ctx.cfg.master_seed, block_stream(4, j)});
    GridPath neg = b;
    for (double& v : neg.values) v = -v;
    const GridPath xa = solve_pbm(b, PbmParams{0.7, -0.3});
    const GridPath xb = solve_pbm(neg, PbmParams{-0.3, 0.7});
    for (std::size_t i = 0; i < xa.values.size(); ++i)
      if (xa.values[i] != -xb.values[i]) symmetry_ok = false;
  }

  // Grid convergence: the same Brownian increments at dt = 1e-2 / 1e-3 / 1e-4
  // (coarse paths are subsampled from the fine one, i.e. increments summed);
  // the solved endpoints must form a Cauchy sequence, successive differences
  // shrinking by better than 2x in the median.
  std::vector<double> e1, e2;
  for (std::int64_t j = 0; j < 64; ++j) {
    const GridPath fine = sample_bm(
        1e-4, 1.0, SeedSpec{ctx.cfg.master_seed, block_stream(5, j)});
    GridPath mid, coarse;
    mid.dt = 1e-3;
    coarse.dt = 1e-2;
    for (std::size_t i = 0; i < fine.values.size(); i += 10)
      mid.values.push_back(fine.values[i]);
    for (std::size_t i = 0; i < fine.values.size(); i += 100)
      coarse.values.push_back(fine.values[i]);
    const PbmParams params{0.5, -0.5};
    const double xc = solve_pbm(coarse, params).values.back();
    const double xm = solve_pbm(mid, params).values.back();
    const double xf = solve_pbm(fine, params).values.back();
    e1.push_back(std::fabs(xc - xm));
    e2.push_back(std::fabs(xm - xf));
  }
  const double grid_ratio = median(e1) / median(e2);

  ctx.stats["paths"] = r;
  ctx.stats["dt"] = ctx.cfg.dt;
  ctx.stats["identity_failures"] = identity_fails.load();
  ctx.stats["ks_normal"] = ks_norm.statistic;
  ctx.stats["ks_halfnormal"] = ks_half.statistic;
  ctx.stats["subordinator_ks"] = sub_ks.statistic;
  ctx.stats["selfsim_ks"] = selfsim_ks.statistic;
  ctx.stats["residual_max"] = residual_max;
  ctx.stats["grid_ratio"] = grid_ratio;
  ctx.stats["grid_median_coarse_mid"] = median(e1);
  ctx.stats["grid_median_mid_fine"] = median(e2);

  {
    auto out = open_text(ctx.samples("pbm_marginals.csv"));
    out << "stream,x1,running_max,h1,h2_over_4\n";
    for (std::size_t i = 0; i < x1.size(); ++i)
      out << i << ',' << fmt(x1[i]) << ',' << fmt(bstar[i]) << ','
          << fmt(h1[i]) << ',' << fmt(h2[i]) << '\n';
  }
  {
    std::vector<std::pair<double, double>> phi;
    for (int k = 0; k <= 256; ++k) {
      const double x = -4.0 + 8.0 * k / 256.0;
      phi.emplace_back(x, normal_cdf(x));
    }
    write_xy_csv(ctx.plots("ecdf_endpoint.csv"), "x", "F", ecdf_curve(x1));
    write_svg_plot(ctx.plots("endpoint_marginal.svg"),
                   "Unperturbed endpoint vs N(0,1)",
                   {SvgSeries{"sampled", ecdf_curve(x1), true},
                    SvgSeries{"N(0,1)", phi, true}},
                   "x", "F");
    std::vector<std::pair<double, double>> ge;
    for (std::size_t j = 0; j < e1.size(); ++j)
      ge.emplace_back(e1[j], e2[j]);
    write_xy_csv(ctx.plots("grid_errors.csv"), "coarse_minus_mid",
                 "mid_minus_fine", ge);
  }

  ctx.rec.add_le("residual_max", residual_max, ctx.thr.at("residual_max"));
  ctx.rec.add_flag("identity_bitwise", identity_fails.load() == 0);
  ctx.rec.add_flag("symmetry_bitwise", symmetry_ok);
  ctx.rec.add_le("ks_normal", ks_norm.statistic, ctx.thr.at("ks_normal"));
  ctx.rec.add_le("ks_halfnormal", ks_half.statistic, ctx.thr.at("ks_halfnormal"));
  ctx.rec.add_le("selfsim_ks", selfsim_ks.statistic, ctx.thr.at("selfsim_ks"));
  ctx.rec.add_le("subordinator_cdf_sup", sub_ks.statistic,
                 ctx.thr.at("subordinator_cdf_sup"));
  ctx.rec.add("grid_ratio", grid_ratio, ctx.thr.at("grid_ratio"), ">=");
}

// ---- config validation ------------------------------------------------------

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::bad_config, what);
}

// Fills per-experiment defaults and validates ranges.
void normalize_config(ExperimentConfig& cfg) {
  require(cfg.replicas >= 2, "config: replicas must be >= 2");
  require(cfg.replicas <= 100000000, "config: replicas implausibly large");
  require(cfg.workers >= 1 && cfg.workers <= 256,
          "config: workers must be in [1, 256]");
  require(cfg.dt > 0.0 && cfg.dt <= 0.5, "config: dt must be in (0, 0.5]");
  require(cfg.step_cap >= 0, "config: step_cap must be >= 0");
  require(cfg.dual_coordinate_cap >= 0 && cfg.dual_coordinate_cap <= 6,
          "config: coordinate_cap must be in [0, 6]");
  require(cfg.trajectory_dumps >= 0, "config: trajectory_dumps must be >= 0");
  require(!cfg.out_dir.empty(), "config: out directory must not be empty");

  if (cfg.n_values.empty()) {
    switch (cfg.id) {
      case ExperimentId::theorem1: cfg.n_values = {10000}; break;
      case ExperimentId::theorem2: cfg.n_values = {10000, 100000}; break;
      case ExperimentId::dual: cfg.n_values = {3}; break;
      case ExperimentId::eatall: cfg.n_values = {100, 1000, 10000}; break;
      case ExperimentId::range: cfg.n_values = {100}; break;
      case ExperimentId::quadvar: cfg.n_values = {10000}; break;
      case ExperimentId::backtrack: cfg.n_values = {10000, 100000}; break;
      case ExperimentId::fdd: cfg.n_values = {10000}; break;
      case ExperimentId::tails:
      case ExperimentId::pbm_self: break;  // unused
    }
  }
  std::sort(cfg.n_values.begin(), cfg.n_values.end());
  cfg.n_values.erase(std::unique(cfg.n_values.begin(), cfg.n_values.end()),
                     cfg.n_values.end());

  if (cfg.id == ExperimentId::dual) {
    require(cfg.n_values.size() == 1, "config: dual takes a single level in n");
    require(cfg.n_values.front() >= 1 && cfg.n_values.front() <= 8,
            "config: dual level must be in [1, 8]");
  } else if (cfg.id != ExperimentId::tails && cfg.id != ExperimentId::pbm_self) {
    require(!cfg.n_values.empty(), "config: n list must not be empty");
    for (const std::int64_t n : cfg.n_values)
      require(n >= 10, "config: n values must be >= 10");
  }
  if (cfg.id == ExperimentId::theorem2)
    require(cfg.n_values.size() >= 2,
            "config: theorem2 needs at least two n values for the decay check");
  if (cfg.id == ExperimentId::eatall || cfg.id == ExperimentId::range)
    require(cfg.n_values.back() <= 1000000,
            "config: n too large for first-passage experiments (~n^2 steps)");
  require(cfg.id == ExperimentId::pbm_self || !cfg.law_file.empty(),
          "config: this experiment needs a law file");
}

}  // namespace

// ---- public surface ---------------------------------------------------------

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::theorem1: return "THEOREM1";
    case ExperimentId::theorem2: return "THEOREM2";
    case ExperimentId::dual: return "DUAL";
    case ExperimentId::tails: return "TAILS";
    case ExperimentId::eatall: return "EATALL";
    case ExperimentId::range: return "RANGE";
    case ExperimentId::quadvar: return "QUADVAR";
    case ExperimentId::backtrack: return "BACKTRACK";
    case ExperimentId::fdd: return "FDD";
    case ExperimentId::pbm_self: return "PBM_SELF";
  }
  return "?";
}

std::optional<ExperimentId> experiment_from_string(std::string name) {
  for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  static const std::pair<const char*, ExperimentId> table[] = {
      {"THEOREM1", ExperimentId::theorem1}, {"THEOREM2", ExperimentId::theorem2},
      {"DUAL", ExperimentId::dual},         {"TAILS", ExperimentId::tails},
      {"EATALL", ExperimentId::eatall},     {"RANGE", ExperimentId::range},
      {"QUADVAR", ExperimentId::quadvar},   {"BACKTRACK", ExperimentId::backtrack},
      {"FDD", ExperimentId::fdd},           {"PBM_SELF", ExperimentId::pbm_self}};
  for (const auto& [key, id] : table)
    if (name == key) return id;
  return std::nullopt;
}

std::map<std::string, double> default_thresholds(ExperimentId id) {
  switch (id) {
    case ExperimentId::theorem1:
      return {{"ks_normal", 0.015}, {"ks_pbm", 0.03}, {"asymmetry_gap", 0.15}};
    case ExperimentId::theorem2:
      return {{"neg_level", -0.05},
              {"negativity", 0.02},
              {"quantile_ratio_gap", 0.20},
              {"backtrack_ratio", 0.10}};
    case ExperimentId::dual:
      return {{"tv", 0.01}, {"mean_gap_z", 4.0}};
    case ExperimentId::tails:
      return {{"sigma_exponent_err", 0.15},
              {"sqrt_progeny_exponent_err", 0.15},
              {"pareto_half_err", 0.05},
              {"pareto_unit_err", 0.05}};
    case ExperimentId::eatall:
      return {{"growth_slope", 0.9}};
    case ExperimentId::range:
      return {};
    case ExperimentId::quadvar:
      return {{"median_defect", 0.02}};
    case ExperimentId::backtrack:
      return {{"backtrack_ratio", 0.10}};
    case ExperimentId::fdd:
      return {{"quantile_ratio_gap", 0.25},
              {"subordinator_cdf_sup", 0.01},
              {"censoring", 0.25}};
    case ExperimentId::pbm_self:
      return {{"residual_max", 1e-10},    {"ks_normal", 0.01},
              {"ks_halfnormal", 0.015},   {"selfsim_ks", 0.01},
              {"subordinator_cdf_sup", 0.01}, {"grid_ratio", 2.0}};
  }
  return {};
}

std::vector<SeedSpec> fan_out(std::uint64_t master_seed, std::int64_t replicas) {
  if (replicas < 0)
    throw Error(Errc::invalid_params, "fan_out: negative replica count");
  std::vector<SeedSpec> out;
  out.reserve(static_cast<std::size_t>(replicas));
  for (std::int64_t i = 0; i < replicas; ++i)
    out.push_back(SeedSpec{master_seed, static_cast<std::uint64_t>(i)});
  return out;
}

namespace {

std::int64_t as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw Error(Errc::bad_config, "config: \"" + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

double as_num(const json& v, const std::string& key) {
  if (!v.is_number())
    throw Error(Errc::bad_config, "config: \"" + key + "\" must be a number");
  return v.get<double>();
}

std::string as_str(const json& v, const std::string& key) {
  if (!v.is_string())
    throw Error(Errc::bad_config, "config: \"" + key + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace

ExperimentConfig config_from_text(const std::string& json_text,
                                  const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw Error(Errc::parse_error, std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw Error(Errc::bad_config, "config: top level must be an object");

  ExperimentConfig cfg;
  bool have_experiment = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") {
      const auto id = experiment_from_string(as_str(value, key));
      if (!id)
        throw Error(Errc::bad_config,
                    "config: unknown experiment \"" + as_str(value, key) + "\"");
      cfg.id = *id;
      have_experiment = true;
    } else if (key == "law") {
      cfg.law_file = as_str(value, key);
    } else if (key == "n") {
      cfg.n_values.clear();
      if (value.is_array()) {
        for (const auto& e : value) cfg.n_values.push_back(as_int(e, key));
      } else {
        cfg.n_values.push_back(as_int(value, key));
      }
    } else if (key == "replicas") {
      cfg.replicas = as_int(value, key);
    } else if (key == "seed") {
      if (value.is_number_unsigned()) {
        cfg.master_seed = value.get<std::uint64_t>();
      } else {
        const std::int64_t s = as_int(value, key);
        if (s < 0) throw Error(Errc::bad_config, "config: \"seed\" must be >= 0");
        cfg.master_seed = static_cast<std::uint64_t>(s);
      }
    } else if (key == "out") {
      cfg.out_dir = as_str(value, key);
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(as_int(value, key));
    } else if (key == "dt") {
      cfg.dt = as_num(value, key);
    } else if (key == "step_cap") {
      cfg.step_cap = as_int(value, key);
    } else if (key == "coordinate_cap") {
      cfg.dual_coordinate_cap = static_cast<int>(as_int(value, key));
    } else if (key == "trajectory_dumps") {
      cfg.trajectory_dumps = as_int(value, key);
    } else if (key == "thresholds") {
      if (!value.is_object())
        throw Error(Errc::bad_config, "config: \"thresholds\" must be an object");
      for (const auto& [tname, tval] : value.items())
        cfg.threshold_overrides[tname] = as_num(tval, "thresholds." + tname);
    } else {
      throw Error(Errc::bad_config, "config: unknown key \"" + key + "\"");
    }
  }
  if (!have_experiment)
    throw Error(Errc::bad_config, "config: missing \"experiment\"");

  // Law paths resolve against the config file's directory when that is where
  // the file actually lives.
  if (!cfg.law_file.empty() && !base_dir.empty()) {
    const fs::path p(cfg.law_file);
    if (p.is_relative() && !fs::exists(p) && fs::exists(fs::path(base_dir) / p))
      cfg.law_file = (fs::path(base_dir) / p).string();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::bad_config, "cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_text(buf.str(), fs::path(path).parent_path().string());
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  normalize_config(cfg);
  const Thresholds thr(cfg.id, cfg.threshold_overrides);

  std::optional<CheckedLaw> law;
  if (cfg.id != ExperimentId::pbm_self)
    law = validate(load_law_file(cfg.law_file));
  if (cfg.id == ExperimentId::theorem2 || cfg.id == ExperimentId::backtrack ||
      cfg.id == ExperimentId::fdd) {
    if (std::fabs(law->delta() - 1.0) > 1e-9)
      throw Error(Errc::bad_config,
                  to_string(cfg.id) + " needs a delta = 1 law; got delta = " +
                      std::to_string(law->delta()));
  }

  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "samples");
  fs::create_directories(out / "plots");

  // Everything below is a pure function of (experiment, law, parameters,
  // thresholds); workers and the output location never enter, so re-runs
  // reproduce this file byte for byte.
  json summary;
  summary["experiment"] = to_string(cfg.id);
  if (law) {
    json l;
    l["cookies_per_site"] = law->cookies_per_site();
    l["atoms"] = law->atom_count();
    l["delta"] = law->delta();
    l["mean_right_product"] = law->mean_right_product();
    l["mean_left_product"] = law->mean_left_product();
    summary["law"] = std::move(l);
  }
  {
    json p;
    p["n"] = cfg.n_values;
    p["replicas"] = cfg.replicas;
    p["seed"] = cfg.master_seed;
    p["dt"] = cfg.dt;
    p["step_cap"] = cfg.step_cap;
    p["coordinate_cap"] = cfg.dual_coordinate_cap;
    p["trajectory_dumps"] = cfg.trajectory_dumps;
    summary["parameters"] = std::move(p);
  }
  summary["thresholds"] = thr.all();

  json stats = json::object();
  CheckRecorder rec;
  Ctx ctx{cfg, law ? &*law : nullptr, thr, stats, rec, out};

  switch (cfg.id) {
    case ExperimentId::theorem1: run_theorem1(ctx); break;
    case ExperimentId::theorem2: run_theorem2(ctx); break;
    case ExperimentId::dual: run_dual(ctx); break;
    case ExperimentId::tails: run_tails(ctx); break;
    case ExperimentId::eatall: run_eatall(ctx); break;
    case ExperimentId::range: run_range(ctx); break;
    case ExperimentId::quadvar: run_quadvar(ctx); break;
    case ExperimentId::backtrack: run_backtrack(ctx); break;
    case ExperimentId::fdd: run_fdd(ctx); break;
    case ExperimentId::pbm_self: run_pbm_self(ctx); break;
  }

  summary["statistics"] = std::move(stats);
  json checks = json::array();
  bool all_pass = true;
  for (const CheckOutcome& c : rec.checks) {
    json row;
    row["name"] = c.name;
    row["value"] = c.value;
    row["relation"] = c.relation;
    row["threshold"] = c.threshold;
    row["pass"] = c.pass;
    checks.push_back(std::move(row));
    all_pass = all_pass && c.pass;
  }
  summary["checks"] = std::move(checks);
  summary["pass"] = all_pass;

  const fs::path summary_path = out / "summary.json";
  {
    auto f = open_text(summary_path);
    f << summary.dump(2) << '\n';
  }

  ExperimentReport report;
  report.all_pass = all_pass;
  report.checks = rec.checks;
  report.summary_path = summary_path.string();
  return report;
}

}  // namespace erw
