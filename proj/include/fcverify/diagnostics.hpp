#pragma once

// Threshold-sweep diagnostics: contingency statistics, performance and
// precision-recall curves, Murphy curves, CORP reliability curves, ROC.
//
// Two threshold conventions coexist. Contingency-style sweeps (performance,
// PR, ROC) forecast an event iff x >= theta. Elementary scores, and hence
// Murphy curves, penalize a non-event iff x > theta.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fcverify/errors.hpp"
#include "fcverify/inference.hpp"
#include "fcverify/pairs.hpp"
#include "fcverify/recalibration.hpp"
#include "fcverify/scoring.hpp"

namespace fcv {

struct ContingencyCounts {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t false_alarms = 0;
  std::size_t correct_negatives = 0;

  [[nodiscard]] std::size_t total() const {
    return hits + misses + false_alarms + correct_negatives;
  }
  friend bool operator==(const ContingencyCounts&, const ContingencyCounts&) = default;
};

// Forecasts sorted ascending with cumulative event counts; answers
// "how many events / non-events have x >= theta" in O(log n).
class SortedForecasts {
 public:
  explicit SortedForecasts(const PairSet& pairs) {
    require_nonempty(pairs, "threshold sweep");
    const auto order = detail::forecast_order(pairs);
    x_.reserve(order.size());
    events_below_.reserve(order.size() + 1);
    events_below_.push_back(0);
    for (std::size_t i : order) {
      x_.push_back(pairs.forecast(i));
      events_below_.push_back(events_below_.back() + pairs.outcome(i));
    }
  }

  [[nodiscard]] std::size_t size() const { return x_.size(); }
  [[nodiscard]] std::size_t events() const { return events_below_.back(); }
  [[nodiscard]] std::size_t non_events() const { return size() - events(); }
  [[nodiscard]] std::span<const double> sorted() const { return x_; }

  // Event forecast iff x >= theta.
  [[nodiscard]] ContingencyCounts at(double theta) const {
    const auto k = static_cast<std::size_t>(std::lower_bound(x_.begin(), x_.end(), theta) - x_.begin());
    return split_at(k);
  }

  // Counts when the first k sorted forecasts are called non-events.
  [[nodiscard]] ContingencyCounts split_at(std::size_t k) const {
    ContingencyCounts c;
    c.misses = events_below_[k];
    c.correct_negatives = k - c.misses;
    c.hits = events() - c.misses;
    c.false_alarms = (size() - k) - c.hits;
    return c;
  }

  // Start index of each run of equal forecast values, ascending.
  [[nodiscard]] std::vector<std::size_t> group_starts() const {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (i == 0 || x_[i] != x_[i - 1]) starts.push_back(i);
    }
    return starts;
  }

 private:
  std::vector<double> x_;
  std::vector<std::size_t> events_below_;
};

inline ContingencyCounts contingency(const PairSet& pairs, double theta) {
  require_nonempty(pairs, "contingency");
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw ValidationError("threshold probability " + format_double(theta) + " outside (0,1]");
  }
  ContingencyCounts c;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool warn = pairs.forecast(i) >= theta;
    const bool event = pairs.outcome(i) == 1;
    if (warn && event) {
      ++c.hits;
    } else if (event) {
      ++c.misses;
    } else if (warn) {
      ++c.false_alarms;
    } else {
      ++c.correct_negatives;
    }
  }
  return c;
}

// Undefined statistics (zero denominator) are nullopt.
struct CategoricalStats {
  std::optional<double> pod;  // h / (h + m)
  std::optional<double> sr;   // h / (h + f)
  std::optional<double> csi;  // h / (h + m + f)
  std::optional<double> fb;   // (h + f) / (h + m)
};

inline CategoricalStats categorical_stats(const ContingencyCounts& c) {
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(c.hits, c.hits + c.misses), ratio(c.hits, c.hits + c.false_alarms),
          ratio(c.hits, c.hits + c.misses + c.false_alarms),
          ratio(c.hits + c.false_alarms, c.hits + c.misses)};
}

// ---------------------------------------------------------------------------
// Performance diagram / precision-recall

struct PerformancePoint {
  double theta = 0.0;
  ContingencyCounts counts;
  CategoricalStats stats;
};

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;     // POD
  double precision = 0.0;  // SR
};

struct PrCurve {
  std::vector<PrPoint> points;
  double auc_pr = std::numeric_limits<double>::quiet_NaN();
};

struct PerformanceCurve {
  std::vector<PerformancePoint> points;
  std::vector<double> skipped;  // thresholds where POD or SR is undefined
  std::optional<double> max_csi;
  std::optional<double> argmax_theta;
  PrCurve pr;
};

struct MaxCsi {
  double csi = 0.0;
  double theta = 0.0;
};

// Average precision: sum over distinct thresholds, taken in descending order,
// of precision times the recall increment.
inline double auc_pr(const PairSet& pairs) {
  const SortedForecasts sf(pairs);
  if (sf.events() == 0 || sf.non_events() == 0) {
    throw UndefinedStatisticError("AUCPR needs at least one event and one non-event");
  }
  const auto starts = sf.group_starts();
  double ap = 0.0;
  std::size_t prev_hits = 0;
  for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
    const auto c = sf.split_at(*it);
    if (c.hits == prev_hits) continue;
    const double precision =
        static_cast<double>(c.hits) / static_cast<double>(c.hits + c.false_alarms);
    ap += precision * static_cast<double>(c.hits - prev_hits) / static_cast<double>(sf.events());
    prev_hits = c.hits;
  }
  return ap;
}

// Largest CSI over every distinct forecast value used as threshold.
inline MaxCsi max_csi(const PairSet& pairs) {
  const SortedForecasts sf(pairs);
  MaxCsi best{-1.0, 0.0};
  for (std::size_t k : sf.group_starts()) {
    const auto s = categorical_stats(sf.split_at(k));
    if (s.csi && *s.csi > best.csi) best = {*s.csi, sf.sorted()[k]};
  }
  if (best.csi < 0.0) throw UndefinedStatisticError("CSI undefined at every threshold");
  return best;
}

inline PerformanceCurve performance_curve(const PairSet& pairs, std::span<const double> thresholds) {
  if (thresholds.empty()) throw ValidationError("performance curve needs at least one threshold");
  const SortedForecasts sf(pairs);
  PerformanceCurve out;
  for (double theta : thresholds) {
    if (!(theta > 0.0 && theta <= 1.0)) {
      throw ValidationError("threshold probability " + format_double(theta) + " outside (0,1]");
    }
    PerformancePoint p{theta, sf.at(theta), {}};
    p.stats = categorical_stats(p.counts);
    if (!p.stats.pod || !p.stats.sr) {
      out.skipped.push_back(theta);
      continue;
    }
    if (p.stats.csi && (!out.max_csi || *p.stats.csi > *out.max_csi)) {
      out.max_csi = p.stats.csi;
      out.argmax_theta = theta;
    }
    out.pr.points.push_back({theta, *p.stats.pod, *p.stats.sr});
    out.points.push_back(p);
  }
  if (sf.events() > 0 && sf.non_events() > 0) out.pr.auc_pr = auc_pr(pairs);
  return out;
}

// PR points at every distinct forecast value, in decreasing threshold order.
inline PrCurve pr_curve(const PairSet& pairs) {
  const SortedForecasts sf(pairs);
  PrCurve out;
  const auto starts = sf.group_starts();
  for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
    const auto s = categorical_stats(sf.split_at(*it));
    if (s.pod && s.sr) out.points.push_back({sf.sorted()[*it], *s.pod, *s.sr});
  }
  if (sf.events() > 0 && sf.non_events() > 0) out.auc_pr = auc_pr(pairs);
  return out;
}

// ---------------------------------------------------------------------------
// Murphy curves

// Mean elementary score on [lo, hi) is intercept + slope * theta.
struct MurphySegment {
  double lo = 0.0;
  double hi = 1.0;
  double intercept = 0.0;
  double slope = 0.0;

  [[nodiscard]] double at(double theta) const { return intercept + slope * theta; }
};

// Exact piecewise-linear mean elementary score as a function of theta.
// Breakpoints sit at the distinct forecast values, where the curve jumps.
struct MurphyCurve {
  std::vector<MurphySegment> segments;  // partition of [0, 1)
  std::vector<double> knots;            // distinct forecasts in (0,1) plus grid points
  std::vector<double> values;           // curve value at each knot

  [[nodiscard]] const MurphySegment& segment_at(double theta) const {
    auto it = std::upper_bound(segments.begin(), segments.end(), theta,
                               [](double t, const MurphySegment& s) { return t < s.lo; });
    if (it == segments.begin()) return segments.front();
    return *std::prev(it);
  }

  [[nodiscard]] double at(double theta) const { return segment_at(theta).at(theta); }

  // Integral over [lo, hi] of the curve, exact.
  [[nodiscard]] double integral(double lo = 0.0, double hi = 1.0) const {
    double total = 0.0;
    for (const auto& s : segments) {
      const double a = std::max(lo, s.lo);
      const double b = std::min(hi, s.hi);
      if (b <= a) continue;
      total += s.intercept * (b - a) + s.slope * (b * b - a * a) / 2.0;
    }
    return total;
  }
};

inline MurphyCurve murphy_curve(const PairSet& pairs, std::span<const double> grid = {}) {
  const SortedForecasts sf(pairs);
  const auto n = static_cast<double>(sf.size());
  const auto x = sf.sorted();

  std::vector<double> breaks{0.0};
  for (std::size_t k : sf.group_starts()) {
    if (x[k] > 0.0 && x[k] < 1.0) breaks.push_back(x[k]);
  }
  breaks.push_back(1.0);

  MurphyCurve curve;
  for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
    // On [b_j, b_{j+1}) a non-event is penalized iff x > b_j, an event iff x <= b_j.
    const auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), breaks[j]) - x.begin());
    const auto c = sf.split_at(k);
    const auto penalized_non_events = static_cast<double>(c.false_alarms);
    const auto penalized_events = static_cast<double>(c.misses);
    curve.segments.push_back({breaks[j], breaks[j + 1], 2.0 * penalized_events / n,
                              2.0 * (penalized_non_events - penalized_events) / n});
  }

  std::vector<double> knots(breaks.begin() + 1, breaks.end() - 1);
  for (double g : grid) {
    if (!(g > 0.0 && g < 1.0)) throw ValidationError("Murphy grid point " + format_double(g) + " outside (0,1)");
    knots.push_back(g);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  curve.knots = knots;
  for (double t : knots) curve.values.push_back(curve.at(t));
  return curve;
}

// True iff a(theta) <= b(theta) + tol for every theta in [0, 1).
inline bool murphy_dominates(const MurphyCurve& a, const MurphyCurve& b, double tol = 1e-12) {
  std::vector<double> pts;
  for (const auto& s : a.segments) pts.push_back(s.lo);
  for (const auto& s : b.segments) pts.push_back(s.lo);
  pts.push_back(1.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto& sa = a.segment_at(pts[i]);
    const auto& sb = b.segment_at(pts[i]);
    // Both are linear on [pts[i], pts[i+1]); check the ends.
    if (sa.at(pts[i]) > sb.at(pts[i]) + tol) return false;
    if (sa.at(pts[i + 1]) > sb.at(pts[i + 1]) + tol) return false;
  }
  return true;
}

struct DifferenceSeries {
  std::vector<std::int64_t> time_index;
  std::vector<double> diff;
};

// Per time step, the spatial mean of S_theta(A) - S_theta(B).
inline DifferenceSeries murphy_difference(const PairSet& a, const PairSet& b, double theta) {
  require_nonempty(a, "murphy_difference");
  if (!a.has_positions() || !b.has_positions()) {
    throw AlignmentError("murphy_difference needs pairs with time positions");
  }
  if (a.size() != b.size()) throw AlignmentError("systems cover different numbers of pairs");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.time_index()[i] != b.time_index()[i] || a.cell_index()[i] != b.cell_index()[i] ||
        a.outcome(i) != b.outcome(i)) {
      throw AlignmentError("systems differ in pair positions at pair " + std::to_string(i));
    }
  }
  std::map<std::int64_t, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto& slot = acc[a.time_index()[i]];
    slot.first += elementary_score(theta, a.forecast(i), a.outcome(i)) -
                  elementary_score(theta, b.forecast(i), b.outcome(i));
    slot.second += 1;
  }
  DifferenceSeries out;
  for (const auto& [t, s] : acc) {
    out.time_index.push_back(t);
    out.diff.push_back(s.first / static_cast<double>(s.second));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CORP reliability

struct ReliabilityPoint {
  double forecast_lo = 0.0;
  double forecast_hi = 0.0;
  double recalibrated = 0.0;
  std::size_t count = 0;
};

struct BandPoint {
  double forecast = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ReliabilityCurve {
  std::vector<ReliabilityPoint> points;
  // Forecast counts in [0,0.1), [0.1,0.2), ..., [0.9,1.0].
  std::array<std::size_t, 10> histogram{};
  std::vector<BandPoint> band;
};

inline std::size_t histogram_bin(double x) {
  std::size_t bin = 0;
  while (bin < 9 && x >= static_cast<double>(bin + 1) / 10.0) ++bin;
  return bin;
}

inline ReliabilityCurve reliability_curve(const PairSet& pairs,
                                          const std::optional<BootstrapConfig>& bootstrap = {}) {
  const IsotonicFit fit = pav_fit(pairs);
  ReliabilityCurve out;
  for (const auto& b : fit.blocks) {
    out.points.push_back({b.forecast_lo, b.forecast_hi, b.fitted, b.count});
  }
  for (double x : pairs.forecasts()) ++out.histogram[histogram_bin(x)];

  if (bootstrap) {
    std::vector<double> at(pairs.forecasts().begin(), pairs.forecasts().end());
    std::sort(at.begin(), at.end());
    at.erase(std::unique(at.begin(), at.end()), at.end());
    const PairGrid grid(pairs);
    auto ci = circular_block_bootstrap_multi(
        grid.shape(),
        [&](std::span<const std::size_t> source) {
          const auto idx = grid.pairs_in(source);
          if (idx.empty()) throw EmptyDataError("resample holds no pairs");
          const IsotonicFit f = pav_fit(pairs.select(idx));
          std::vector<double> v;
          v.reserve(at.size());
          for (double x : at) v.push_back(apply_fit(f, x));
          return v;
        },
        *bootstrap);
    for (std::size_t k = 0; k < at.size(); ++k) out.band.push_back({at[k], ci[k].lo, ci[k].hi});
  }
  return out;
}

// ---------------------------------------------------------------------------
// ROC

struct RocPoint {
  double threshold = 0.0;  // +inf for the (0,0) anchor
  double false_alarm_rate = 0.0;
  double hit_rate = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0.0;
  bool concave = false;

  // Upper envelope of the curve at a false alarm rate.
  [[nodiscard]] double hit_rate_at(double far) const {
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      const auto& p = points[i];
      const auto& q = points[i + 1];
      if (far < p.false_alarm_rate || far > q.false_alarm_rate) continue;
      double h = 0.0;
      if (q.false_alarm_rate == p.false_alarm_rate) {
        h = std::max(p.hit_rate, q.hit_rate);
      } else {
        const double w = (far - p.false_alarm_rate) / (q.false_alarm_rate - p.false_alarm_rate);
        h = p.hit_rate + w * (q.hit_rate - p.hit_rate);
      }
      best = std::max(best, h);
    }
    return best;
  }
};

namespace detail {

inline RocCurve roc_sweep(const PairSet& pairs) {
  const SortedForecasts sf(pairs);
  if (sf.events() == 0 || sf.non_events() == 0) {
    throw UndefinedStatisticError("ROC needs at least one event and one non-event");
  }
  const auto pos = static_cast<double>(sf.events());
  const auto neg = static_cast<double>(sf.non_events());
  RocCurve out;
  out.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  const auto starts = sf.group_starts();
  for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
    const auto c = sf.split_at(*it);
    out.points.push_back({sf.sorted()[*it], static_cast<double>(c.false_alarms) / neg,
                          static_cast<double>(c.hits) / pos});
  }
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    const auto& p = out.points[i - 1];
    const auto& q = out.points[i];
    out.auc += (q.false_alarm_rate - p.false_alarm_rate) * (q.hit_rate + p.hit_rate) / 2.0;
  }
  return out;
}

}  // namespace detail

// Sweeps the distinct forecast values (event iff x >= threshold). The
// concave variant sweeps the PAV-recalibrated forecasts instead.
inline RocCurve roc_curve(const PairSet& pairs, bool concave) {
  RocCurve out = detail::roc_sweep(concave ? recalibrate(pairs) : pairs);
  out.concave = concave;
  return out;
}

// True iff a lies on or above b everywhere (within tol).
inline bool roc_dominates(const RocCurve& a, const RocCurve& b, double tol = 1e-12) {
  std::vector<double> fars;
  for (const auto& p : a.points) fars.push_back(p.false_alarm_rate);
  for (const auto& p : b.points) fars.push_back(p.false_alarm_rate);
  std::sort(fars.begin(), fars.end());
  fars.erase(std::unique(fars.begin(), fars.end()), fars.end());
  return std::all_of(fars.begin(), fars.end(),
                     [&](double f) { return a.hit_rate_at(f) + tol >= b.hit_rate_at(f); });
}

// ---------------------------------------------------------------------------
// CSI hedging

// Probability above which forecasting an event maximizes the expected CSI
// of the next case, given the CSI so far.
inline double csi_hedging_bound(double csi_current) {
  if (!(csi_current >= 0.0 && csi_current <= 1.0)) {
    throw ValidationError("CSI " + format_double(csi_current) + " outside [0,1]");
  }
  return csi_current / (csi_current + 1.0);
}

// Expected CSI after one more case with event probability p, by
// enumerating both outcomes.
inline double expected_next_csi(const ContingencyCounts& history, double p, bool forecast_event) {
  auto csi = [](std::size_t h, std::size_t m, std::size_t f) {
    const std::size_t den = h + m + f;
    return den == 0 ? 0.0 : static_cast<double>(h) / static_cast<double>(den);
  };
  const std::size_t h = history.hits;
  const std::size_t m = history.misses;
  const std::size_t f = history.false_alarms;
  if (forecast_event) return p * csi(h + 1, m, f) + (1.0 - p) * csi(h, m, f + 1);
  return p * csi(h, m + 1, f) + (1.0 - p) * csi(h, m, f);
}

struct HedgingExample {
  ContingencyCounts history;
  double csi = 0.0;
  double bound = 0.0;
  double theta = 0.0;
  double p = 0.0;
  double expected_if_event = 0.0;
  double expected_if_honest = 0.0;
};

// A case where a forecaster with belief p < theta raises expected CSI by
// forecasting at least theta instead of the honest p.
inline HedgingExample demonstrate_csi_hedging(const ContingencyCounts& history, double theta,
                                              double p) {
  HedgingExample ex;
  ex.history = history;
  ex.csi = categorical_stats(history).csi.value_or(0.0);
  ex.bound = csi_hedging_bound(ex.csi);
  ex.theta = theta;
  ex.p = p;
  ex.expected_if_event = expected_next_csi(history, p, true);
  // Honest forecast p is below theta, so it converts to a non-event.
  ex.expected_if_honest = expected_next_csi(history, p, p >= theta);
  return ex;
}

// Searches small histories and a 0.01 grid of (theta, p) for a strict
// hedging gain with theta > p >= CSI / (CSI + 1).
inline std::optional<HedgingExample> find_csi_hedging_example(std::size_t max_count = 5) {
  for (std::size_t h = 1; h <= max_count; ++h) {
    for (std::size_t m = 0; m <= max_count; ++m) {
      for (std::size_t f = 0; f <= max_count; ++f) {
        const ContingencyCounts hist{h, m, f, 0};
        const double bound = csi_hedging_bound(*categorical_stats(hist).csi);
        for (int pi = 1; pi < 99; ++pi) {
          const double p = pi / 100.0;
          if (p < bound) continue;
          for (int ti = pi + 1; ti < 100; ++ti) {
            const auto ex = demonstrate_csi_hedging(hist, ti / 100.0, p);
            if (ex.expected_if_event > ex.expected_if_honest) return ex;
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace fcv
