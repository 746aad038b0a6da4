#pragma once

// Proper scoring rules for probability forecasts of binary outcomes.
//
// Every rule here is a mixture of the elementary scores
//
//   S_theta(x, y) = 2 theta       if y = 0 and x > theta
//                   2 (1 - theta) if y = 1 and x <= theta
//                   0             otherwise
//
// over decision thresholds theta: the uniform measure gives the Brier score,
// dH = d(theta) / (2 theta (1 - theta)) the logarithmic score, and point masses
// the FIRM scores.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fcverify/errors.hpp"
#include "fcverify/format.hpp"
#include "fcverify/pairs.hpp"

namespace fcv {

namespace detail {

inline void check_pair(double x, int y) {
  if (!is_probability(x)) throw ValidationError("forecast " + format_double(x) + " outside [0,1]");
  if (y != 0 && y != 1) throw ValidationError("outcome " + std::to_string(y) + " is not binary");
}

inline void check_theta(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ValidationError("decision threshold " + format_double(theta) + " outside (0,1)");
  }
}

}  // namespace detail

inline double brier(double x, int y) {
  detail::check_pair(x, y);
  const double d = x - y;
  return d * d;
}

// Natural-log penalty; +inf for a confident miss (x = 0, y = 1 or x = 1, y = 0).
inline double log_score(double x, int y) {
  detail::check_pair(x, y);
  const double p = y == 1 ? x : 1.0 - x;
  if (p == 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(p);
}

// The boundary x == theta counts as "x <= theta".
inline double elementary_score(double theta, double x, int y) {
  detail::check_theta(theta);
  detail::check_pair(x, y);
  if (y == 0) return x > theta ? 2.0 * theta : 0.0;
  return x <= theta ? 2.0 * (1.0 - theta) : 0.0;
}

// Decision thresholds theta_1 < ... < theta_k with positive weights.
class FirmSpec {
 public:
  FirmSpec(std::vector<double> thresholds, std::vector<double> weights)
      : thresholds_(std::move(thresholds)), weights_(std::move(weights)) {
    if (thresholds_.empty()) throw ValidationError("FIRM spec needs at least one threshold");
    if (thresholds_.size() != weights_.size()) {
      throw ValidationError("FIRM spec has " + std::to_string(thresholds_.size()) +
                            " thresholds but " + std::to_string(weights_.size()) + " weights");
    }
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
      detail::check_theta(thresholds_[i]);
      if (i > 0 && !(thresholds_[i] > thresholds_[i - 1])) {
        throw ValidationError("FIRM thresholds must be strictly increasing");
      }
      if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
        throw ValidationError("FIRM weights must be positive and finite");
      }
    }
  }

  [[nodiscard]] const std::vector<double>& thresholds() const { return thresholds_; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  [[nodiscard]] std::size_t size() const { return thresholds_.size(); }
  [[nodiscard]] std::size_t categories() const { return thresholds_.size() + 1; }

  // Category of a probability: the number of thresholds strictly below it.
  // A forecast exactly on theta_i sits in the lower category, matching the
  // closed "x <= theta" side of the elementary score.
  [[nodiscard]] std::size_t category(double x) const {
    std::size_t c = 0;
    while (c < thresholds_.size() && x > thresholds_[c]) ++c;
    return c;
  }

  friend bool operator==(const FirmSpec&, const FirmSpec&) = default;

 private:
  std::vector<double> thresholds_;
  std::vector<double> weights_;
};

inline double firm_score(const FirmSpec& spec, double x, int y) {
  detail::check_pair(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    s += spec.weights()[i] * elementary_score(spec.thresholds()[i], x, y);
  }
  return s;
}

// Penalty per (forecast category, observed outcome).
struct ScoringMatrix {
  std::vector<std::string> categories;
  std::vector<double> non_event;  // observed y = 0
  std::vector<double> event;      // observed y = 1

  [[nodiscard]] double penalty(std::size_t category, int y) const {
    return y == 1 ? event.at(category) : non_event.at(category);
  }
};

// Category c covers (theta_c, theta_{c+1}] with theta_0 = 0, theta_{k+1} = 1.
inline ScoringMatrix firm_matrix(const FirmSpec& spec) {
  const std::size_t k = spec.size();
  ScoringMatrix m;
  for (std::size_t c = 0; c <= k; ++c) {
    double miss_cost = 0.0;
    double false_alarm_cost = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double th = spec.thresholds()[i];
      const double w = spec.weights()[i];
      if (i < c) {
        false_alarm_cost += w * th;
      } else {
        miss_cost += w * (1.0 - th);
      }
    }
    m.non_event.push_back(2.0 * false_alarm_cost);
    m.event.push_back(2.0 * miss_cost);
    const double lo = c == 0 ? 0.0 : spec.thresholds()[c - 1];
    const double hi = c == k ? 1.0 : spec.thresholds()[c];
    m.categories.push_back((c == 0 ? "[" : "(") + format_double(lo) + "," + format_double(hi) +
                           "]");
  }
  return m;
}

// ---------------------------------------------------------------------------
// ScoringRule

struct BrierRule {
  friend bool operator==(const BrierRule&, const BrierRule&) = default;
};
struct LogRule {
  friend bool operator==(const LogRule&, const LogRule&) = default;
};
struct ElementaryRule {
  double theta;
  friend bool operator==(const ElementaryRule&, const ElementaryRule&) = default;
};
struct FirmRule {
  FirmSpec spec;
  friend bool operator==(const FirmRule&, const FirmRule&) = default;
};

class ScoringRule {
 public:
  using Variant = std::variant<BrierRule, LogRule, ElementaryRule, FirmRule>;

  ScoringRule() : rule_(BrierRule{}) {}
  ScoringRule(BrierRule r) : rule_(r) {}  // NOLINT(google-explicit-constructor)
  ScoringRule(LogRule r) : rule_(r) {}    // NOLINT(google-explicit-constructor)
  ScoringRule(ElementaryRule r) : rule_(r) { detail::check_theta(r.theta); }  // NOLINT
  ScoringRule(FirmRule r) : rule_(std::move(r)) {}                            // NOLINT
  ScoringRule(FirmSpec spec) : rule_(FirmRule{std::move(spec)}) {}            // NOLINT

  static ScoringRule brier() { return BrierRule{}; }
  static ScoringRule log() { return LogRule{}; }
  static ScoringRule elementary(double theta) { return ElementaryRule{theta}; }
  static ScoringRule firm(std::vector<double> thresholds, std::vector<double> weights) {
    return FirmSpec(std::move(thresholds), std::move(weights));
  }

  [[nodiscard]] const Variant& variant() const { return rule_; }
  [[nodiscard]] bool is_log() const { return std::holds_alternative<LogRule>(rule_); }

  [[nodiscard]] double operator()(double x, int y) const {
    return std::visit(
        [&](const auto& r) -> double {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, BrierRule>) {
            return fcv::brier(x, y);
          } else if constexpr (std::is_same_v<T, LogRule>) {
            return fcv::log_score(x, y);
          } else if constexpr (std::is_same_v<T, ElementaryRule>) {
            return fcv::elementary_score(r.theta, x, y);
          } else {
            return fcv::firm_score(r.spec, x, y);
          }
        },
        rule_);
  }

  // Short label used in CSV output: brier, log, elementary(0.3), firm(0.095:1;0.295:1).
  [[nodiscard]] std::string label() const {
    return std::visit(
        [](const auto& r) -> std::string {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, BrierRule>) {
            return "brier";
          } else if constexpr (std::is_same_v<T, LogRule>) {
            return "log";
          } else if constexpr (std::is_same_v<T, ElementaryRule>) {
            return "elementary(" + format_double(r.theta) + ")";
          } else {
            std::string s = "firm(";
            for (std::size_t i = 0; i < r.spec.size(); ++i) {
              if (i) s += ';';
              s += format_double(r.spec.thresholds()[i]) + ":" +
                   format_double(r.spec.weights()[i]);
            }
            return s + ")";
          }
        },
        rule_);
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return std::visit(
        [](const auto& r) -> nlohmann::json {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, BrierRule>) {
            return {{"rule", "brier"}};
          } else if constexpr (std::is_same_v<T, LogRule>) {
            return {{"rule", "log"}};
          } else if constexpr (std::is_same_v<T, ElementaryRule>) {
            return {{"rule", "elementary"}, {"theta", r.theta}};
          } else {
            return {{"rule", "firm"},
                    {"thresholds", r.spec.thresholds()},
                    {"weights", r.spec.weights()}};
          }
        },
        rule_);
  }

  static ScoringRule from_json(const nlohmann::json& j) {
    try {
      const auto kind = j.at("rule").get<std::string>();
      if (kind == "brier") return brier();
      if (kind == "log") return log();
      if (kind == "elementary") return elementary(j.at("theta").get<double>());
      if (kind == "firm") {
        auto th = j.at("thresholds").get<std::vector<double>>();
        std::vector<double> w(th.size(), 1.0);
        if (j.contains("weights")) w = j.at("weights").get<std::vector<double>>();
        return firm(std::move(th), std::move(w));
      }
      throw ConfigError("unknown scoring rule '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed scoring rule: ") + e.what());
    }
  }

  static ScoringRule parse(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("scoring rule is not valid JSON: " + text);
    }
    return from_json(j);
  }

  friend bool operator==(const ScoringRule&, const ScoringRule&) = default;

 private:
  Variant rule_;
};

enum class InfinityPolicy { reject, propagate };

// Mean of per-pair scores. Infinite log scores are an error unless the
// caller asks for them to propagate.
inline double mean_score(const PairSet& pairs, const ScoringRule& rule,
                         InfinityPolicy inf = InfinityPolicy::reject) {
  require_nonempty(pairs, "mean_score");
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double s = rule(pairs.forecast(i), pairs.outcome(i));
    if (std::isinf(s) && inf == InfinityPolicy::reject) {
      throw ValidationError("infinite " + rule.label() + " score at pair " + std::to_string(i) +
                            " (forecast " + format_double(pairs.forecast(i)) + ")");
    }
    sum += s;
  }
  return sum / static_cast<double>(pairs.size());
}

// Mean score of arbitrary forecasts against the outcomes of `pairs`.
inline double mean_score(std::span<const double> forecasts, std::span<const std::uint8_t> outcomes,
                         const ScoringRule& rule, InfinityPolicy inf = InfinityPolicy::reject) {
  if (forecasts.empty()) throw EmptyDataError("mean_score: no forecast-observation pairs");
  if (forecasts.size() != outcomes.size()) {
    throw ValidationError("mean_score: forecasts and outcomes differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double s = rule(forecasts[i], outcomes[i]);
    if (std::isinf(s) && inf == InfinityPolicy::reject) {
      throw ValidationError("infinite " + rule.label() + " score at pair " + std::to_string(i));
    }
    sum += s;
  }
  return sum / static_cast<double>(forecasts.size());
}

// ---------------------------------------------------------------------------
// Mixture representation

enum class MixingMeasure {
  uniform,      // dH = d(theta)
  log_measure,  // dH = d(theta) / (2 theta (1 - theta))
};

inline MixingMeasure mixing_measure_from_string(const std::string& name) {
  if (name == "uniform") return MixingMeasure::uniform;
  if (name == "log" || name == "log_measure") return MixingMeasure::log_measure;
  throw ConfigError("unsupported mixing measure '" + name + "'");
}

// Closed form of the integral of S_theta(x, y) dH(theta) over (0, 1).
//
// For y = 0 the integrand is nonzero on theta < x, for y = 1 on theta >= x:
//   uniform: int_0^x 2t dt = x^2,     int_x^1 2(1-t) dt = (1-x)^2
//   log:     int_0^x dt/(1-t) = -ln(1-x),  int_x^1 dt/t = -ln(x)
inline double mixture_score(double x, int y, MixingMeasure measure) {
  detail::check_pair(x, y);
  switch (measure) {
    case MixingMeasure::uniform:
      return y == 0 ? x * x : (1.0 - x) * (1.0 - x);
    case MixingMeasure::log_measure: {
      const double p = y == 0 ? 1.0 - x : x;
      return p == 0.0 ? std::numeric_limits<double>::infinity() : -std::log(p);
    }
  }
  throw ConfigError("unsupported mixing measure");
}

}  // namespace fcv
