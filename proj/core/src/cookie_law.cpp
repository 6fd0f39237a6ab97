#include "erwlab/cookie_law.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "erwlab/error.hpp"

namespace erw {

CookieStack::CookieStack(std::vector<double> right_probs) : right_(std::move(right_probs)) {
  left_.resize(right_.size());
  for (std::size_t i = 0; i < right_.size(); ++i) left_[i] = 1.0 - right_[i];
}

CookieLaw mirror(const CookieLaw& law) {
  CookieLaw out;
  out.cookies_per_site = law.cookies_per_site;
  out.support.reserve(law.support.size());
  for (const LawAtom& atom : law.support)
    out.support.push_back({atom.stack.mirrored(), atom.weight});
  return out;
}

double delta_of(const CookieLaw& law) {
  double total = 0.0;
  for (const LawAtom& atom : law.support) {
    double stack_drift = 0.0;
    for (int i = 0; i < atom.stack.size(); ++i) stack_drift += atom.stack.drift(i);
    total += atom.weight * stack_drift;
  }
  return total;
}

CheckedLaw validate(const CookieLaw& law) {
  if (law.cookies_per_site < 1)
    throw Error(Errc::bad_stack, "law: cookies_per_site must be >= 1");
  if (law.support.empty())
    throw Error(Errc::bad_weights, "law: empty support");

  double weight_sum = 0.0;
  for (const LawAtom& atom : law.support) {
    if (atom.stack.size() != law.cookies_per_site)
      throw Error(Errc::bad_stack, "law: stack length differs from cookies_per_site");
    for (int i = 0; i < atom.stack.size(); ++i) {
      const double p = atom.stack.right(i);
      if (!(p >= 0.0) || !(p <= 1.0))
        throw Error(Errc::bad_stack, "law: stack entry outside [0,1]");
    }
    if (!(atom.weight > 0.0))
      throw Error(Errc::bad_weights, "law: weights must be positive");
    weight_sum += atom.weight;
  }
  if (std::fabs(weight_sum - 1.0) > 1e-12)
    throw Error(Errc::bad_weights, "law: weights must sum to 1 within 1e-12");

  CheckedLaw checked(law);
  // Non-degeneracy: with positive probability a fresh stack can send the walk
  // right on every cookie, and likewise left; otherwise the walk can freeze
  // on a one-sided environment.  Strict positivity, no tolerance: only exact
  // 0/1 entries (or all weight on them) can fail this.
  if (!(checked.mean_right_product() > 0.0) || !(checked.mean_left_product() > 0.0))
    throw Error(Errc::degenerate_law, "law: degenerate (a one-sided product has mean zero)");
  return checked;
}

CheckedLaw::CheckedLaw(CookieLaw law) : law_(std::move(law)) {
  const std::size_t m = static_cast<std::size_t>(law_.cookies_per_site);
  right_flat_.reserve(law_.support.size() * m);
  drift_flat_.reserve(law_.support.size() * m);
  cum_weight_.reserve(law_.support.size());

  double cum = 0.0;
  for (const LawAtom& atom : law_.support) {
    double stack_drift = 0.0;
    double right_product = 1.0;
    double left_product = 1.0;
    for (int i = 0; i < atom.stack.size(); ++i) {
      right_flat_.push_back(atom.stack.right(i));
      drift_flat_.push_back(atom.stack.drift(i));
      stack_drift += atom.stack.drift(i);
      right_product *= atom.stack.right(i);
      left_product *= atom.stack.left(i);
    }
    delta_ += atom.weight * stack_drift;
    mean_right_product_ += atom.weight * right_product;
    mean_left_product_ += atom.weight * left_product;
    cum += atom.weight;
    cum_weight_.push_back(cum);
  }
  cum_weight_.back() = 1.0;  // guard the search against round-off in the sum
}

std::size_t CheckedLaw::pick_atom(double u) const {
  const auto it = std::upper_bound(cum_weight_.begin(), cum_weight_.end(), u);
  const std::size_t idx = static_cast<std::size_t>(it - cum_weight_.begin());
  return std::min(idx, cum_weight_.size() - 1);
}

// ---- law files --------------------------------------------------------------

namespace {

CookieLaw law_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("M") || !j.contains("support"))
    throw Error(Errc::parse_error, "law file: expected object with \"M\" and \"support\"");
  CookieLaw law;
  if (!j["M"].is_number_integer())
    throw Error(Errc::parse_error, "law file: \"M\" must be an integer");
  law.cookies_per_site = j["M"].get<int>();
  if (!j["support"].is_array())
    throw Error(Errc::parse_error, "law file: \"support\" must be an array");
  for (const auto& entry : j["support"]) {
    if (!entry.is_object() || !entry.contains("probs") || !entry.contains("weight"))
      throw Error(Errc::parse_error, "law file: support entries need \"probs\" and \"weight\"");
    if (!entry["probs"].is_array())
      throw Error(Errc::parse_error, "law file: \"probs\" must be an array");
    std::vector<double> probs;
    for (const auto& p : entry["probs"]) {
      if (!p.is_number()) throw Error(Errc::parse_error, "law file: probs must be numbers");
      probs.push_back(p.get<double>());
    }
    if (!entry["weight"].is_number())
      throw Error(Errc::parse_error, "law file: weight must be a number");
    law.support.push_back({CookieStack(std::move(probs)), entry["weight"].get<double>()});
  }
  return law;
}

}  // namespace

CookieLaw parse_law_text(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::parse_error, "law file: invalid JSON");
  return law_from_json(j);
}

CookieLaw load_law_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "law file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_law_text(buf.str());
}

std::string law_to_text(const CookieLaw& law, int indent) {
  nlohmann::ordered_json j;
  j["M"] = law.cookies_per_site;
  j["support"] = nlohmann::ordered_json::array();
  for (const LawAtom& atom : law.support) {
    nlohmann::ordered_json entry;
    entry["probs"] = atom.stack.right_probs();
    entry["weight"] = atom.weight;
    j["support"].push_back(entry);
  }
  return j.dump(indent) + "\n";
}

}  // namespace erw
