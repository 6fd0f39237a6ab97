#pragma once

// Experiment harness: named batch experiments, one per theorem/lemma-level
// claim, driven by a JSON config.  Every experiment fans a master seed out
// into per-replica streams (results never depend on worker count), judges its
// statistics against thresholds frozen from the acceptance suite (all
// overridable in the config), and writes
//
//   <out>/summary.json   -- config echo, statistics, thresholds, checks
//   <out>/samples/*.csv  -- raw per-replica records
//   <out>/plots/*.csv|svg -- ECDF pairs, tail curves, minimal rendered plots
//
// Re-running a config reproduces summary.json byte for byte.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erwlab/rng.hpp"

namespace erw {

enum class ExperimentId {
  theorem1,   // diffusive limit: scaled marginal vs BM (delta=0) or PBM reference
  theorem2,   // boundary limit delta=1: negativity, shape ratio, backtrack
  dual,       // walk downcrossings vs branching process, joint law
  tails,      // lifetime / progeny tail exponents + synthetic Pareto calibration
  eatall,     // unspent-cookie counts at T_n, log-log growth
  range,      // P(T_n <= n^2/L) monotone in L
  quadvar,    // quadratic-variation defect and its exact bound
  backtrack,  // backtrack vs running max under boundary scaling
  fdd,        // hitting-time marginals vs the stable-1/2 subordinator
  pbm_self,   // reference-solver self-checks (no walk involved)
};

std::string to_string(ExperimentId id);
std::optional<ExperimentId> experiment_from_string(std::string name);

struct ExperimentConfig {
  ExperimentId id = ExperimentId::theorem1;
  std::string law_file;              // unused by pbm_self
  std::vector<std::int64_t> n_values;  // n list; the dual level for `dual`
  std::int64_t replicas = 10000;
  std::uint64_t master_seed = 1;
  std::string out_dir = "out";
  int workers = 1;
  double dt = 1e-4;                  // reference-path grid
  std::int64_t step_cap = 0;         // 0 = per-experiment default
  int dual_coordinate_cap = 1;       // truncation for the dual TV histogram
  std::int64_t trajectory_dumps = 0; // per-step CSVs for the first k replicas
  std::map<std::string, double> threshold_overrides;
};

// Config JSON: { "experiment": name, "law": path, "n": int or [ints],
//   "replicas": int, "seed": u64, "out": dir, "workers": int, "dt": real,
//   "step_cap": int, "coordinate_cap": int, "trajectory_dumps": int,
//   "thresholds": { name: value } }.
// Relative law paths resolve against the config file's directory first.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_text(const std::string& json_text,
                                  const std::string& base_dir = "");

// Frozen default thresholds for an experiment; override keys must come from
// this set (typos are config errors).
std::map<std::string, double> default_thresholds(ExperimentId id);

// Replica seed fan-out: streams 0..replicas-1 under the master seed.
std::vector<SeedSpec> fan_out(std::uint64_t master_seed, std::int64_t replicas);

struct CheckOutcome {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=", ">=", "==", "|rel err| <="
  bool pass = false;
};

struct ExperimentReport {
  bool all_pass = false;
  std::vector<CheckOutcome> checks;
  std::string summary_path;
};

// Runs the experiment, writes all outputs, returns the judged checks.
// Throws Error (bad_config and friends) for unusable configs.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace erw
