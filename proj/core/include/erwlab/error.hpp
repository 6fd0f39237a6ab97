#pragma once

#include <stdexcept>
#include <string>

namespace erw {

// Failure categories raised by the library.  Timeouts are deliberately not
// exceptions: operations that can run out of step budget report that through
// their return value so the caller can decide whether the cap was too small.
enum class Errc {
  bad_weights,            // law weights invalid or do not sum to one
  degenerate_law,         // non-degeneracy condition fails (walk can freeze)
  bad_stack,              // stack length / probability range violation
  parse_error,            // malformed law or config file
  missing_hit,            // asked for a crossing count at a level never hit
  horizon_too_large,      // exact enumeration requested beyond the supported horizon
  insufficient_data,      // too few samples for a stable estimate
  range_beyond_censoring, // tail fit window overlaps censored observations
  run_too_short,          // diagnostic horizon exceeds the recorded run
  missing_trace,          // diagnostic needs per-step records the run lacks
  empty_sample,           // statistic of an empty sample
  out_of_range,           // probability / quantile argument outside its domain
  invalid_params,         // malformed operation parameters
  bad_config,             // experiment configuration rejected
};

// Single exception type for all library errors; `code()` identifies the
// category so tests can assert on the precise failure mode.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace erw
