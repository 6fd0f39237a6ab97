#pragma once

// Cookie environments: per-site stacks of transition probabilities and the
// finitely supported i.i.d. law they are drawn from.
//
// A site's stack lists the probability of stepping right on the i-th visit to
// that site; after the stack is exhausted every further visit is a fair coin.
// A law is a finite set of stacks with positive weights summing to one.  The
// walk-relevant summary of a law is
//
//   delta = E[ sum_i (2 omega(i) - 1) ],
//
// the expected total drift stored at a fresh site, and the non-degeneracy
// condition  E[prod_i omega(i)] > 0  and  E[prod_i (1 - omega(i))] > 0, which
// rules out environments that can trap the walk.
//
// Stacks keep both omega and 1-omega: the complement is computed once at
// construction, and mirroring a stack swaps the two arrays.  This makes
// mirror an exact involution and makes mirrored quantities (delta, crossing
// probabilities, exact pmfs) negate or swap bitwise rather than up to
// round-off.

#include <cstdint>
#include <string>
#include <vector>

#include "erwlab/rng.hpp"

namespace erw {

class CookieStack {
 public:
  CookieStack() = default;
  explicit CookieStack(std::vector<double> right_probs);

  int size() const { return static_cast<int>(right_.size()); }
  bool empty() const { return right_.empty(); }

  // Probability of stepping right / left on visit i (0-based, i < size()).
  double right(int i) const { return right_[static_cast<std::size_t>(i)]; }
  double left(int i) const { return left_[static_cast<std::size_t>(i)]; }
  // Conditional one-step drift on visit i: right(i) - left(i).
  double drift(int i) const { return right_[i] - left_[i]; }

  const std::vector<double>& right_probs() const { return right_; }
  const std::vector<double>& left_probs() const { return left_; }

  // Stack with right and left roles exchanged; an exact involution.
  CookieStack mirrored() const { return CookieStack(left_, right_); }

  friend bool operator==(const CookieStack&, const CookieStack&) = default;

 private:
  CookieStack(std::vector<double> right, std::vector<double> left)
      : right_(std::move(right)), left_(std::move(left)) {}

  std::vector<double> right_;
  std::vector<double> left_;  // elementwise 1 - right_, fixed at construction
};

struct LawAtom {
  CookieStack stack;
  double weight = 0.0;

  friend bool operator==(const LawAtom&, const LawAtom&) = default;
};

// A finitely supported cookie law, as read from a law file.  Plain data;
// validate() checks it and produces the form the simulators consume.
struct CookieLaw {
  int cookies_per_site = 0;  // M: stack length at every site
  std::vector<LawAtom> support;

  friend bool operator==(const CookieLaw&, const CookieLaw&) = default;
};

// Law with every stack mirrored; weights unchanged.  Negates delta exactly.
CookieLaw mirror(const CookieLaw& law);

// Expected total drift per site (meaningful once the law validates).
double delta_of(const CookieLaw& law);

class CheckedLaw;

// Validates a law: M >= 1, every stack of length M with entries in [0,1],
// weights positive and summing to one within 1e-12, and the non-degeneracy
// condition above.  Throws Errc::bad_stack / bad_weights / degenerate_law.
CheckedLaw validate(const CookieLaw& law);

// A validated law plus its cached summaries, laid out for the hot loops.
class CheckedLaw {
 public:
  const CookieLaw& law() const { return law_; }
  int cookies_per_site() const { return law_.cookies_per_site; }
  std::size_t atom_count() const { return law_.support.size(); }
  const CookieStack& stack(std::size_t atom) const { return law_.support[atom].stack; }
  double weight(std::size_t atom) const { return law_.support[atom].weight; }

  double delta() const { return delta_; }
  double mean_right_product() const { return mean_right_product_; }  // E prod omega
  double mean_left_product() const { return mean_left_product_; }    // E prod (1-omega)

  // Flat per-(atom, visit) tables for the step kernels.
  double right_at(std::size_t atom, int i) const {
    return right_flat_[atom * static_cast<std::size_t>(law_.cookies_per_site) + i];
  }
  double drift_at(std::size_t atom, int i) const {
    return drift_flat_[atom * static_cast<std::size_t>(law_.cookies_per_site) + i];
  }

  // Atom index with cumulative-weight search; u in (0,1).
  std::size_t pick_atom(double u) const;

  // Environment draw for a site: pure in (seed, site), independent across
  // sites, and on a separate sub-stream from all walk noise.
  static std::uint64_t environment_base(SeedSpec seed) {
    return stream_base(seed, Dom::environment);
  }
  std::size_t sample_atom(std::uint64_t environment_base, std::int64_t site) const {
    return pick_atom(to_unit(keyed_u64(environment_base, zigzag(site), 0)));
  }
  const CookieStack& sample_stack(SeedSpec seed, std::int64_t site) const {
    return stack(sample_atom(environment_base(seed), site));
  }

 private:
  friend CheckedLaw validate(const CookieLaw&);
  explicit CheckedLaw(CookieLaw law);

  CookieLaw law_;
  double delta_ = 0.0;
  double mean_right_product_ = 0.0;
  double mean_left_product_ = 0.0;
  std::vector<double> right_flat_;
  std::vector<double> drift_flat_;
  std::vector<double> cum_weight_;
};

// ---- law files --------------------------------------------------------------
//
// Schema: { "M": int, "support": [ { "probs": [p1..pM], "weight": w }, ... ] }

CookieLaw parse_law_text(const std::string& json_text);  // throws Errc::parse_error
CookieLaw load_law_file(const std::string& path);
std::string law_to_text(const CookieLaw& law, int indent = 2);

}  // namespace erw
