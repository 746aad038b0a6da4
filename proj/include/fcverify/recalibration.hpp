#pragma once

// Isotonic (nondecreasing) least-squares regression of binary outcomes on
// forecast values via pool-adjacent-violators.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "json.hpp"

#include "fcverify/errors.hpp"
#include "fcverify/pairs.hpp"

namespace fcv {

struct IsotonicBlock {
  double forecast_lo = 0.0;
  double forecast_hi = 0.0;
  double fitted = 0.0;
  std::size_t count = 0;

  friend bool operator==(const IsotonicBlock&, const IsotonicBlock&) = default;
};

// Blocks are ordered by forecast range and have strictly increasing fitted
// values; their counts sum to source_n.
struct IsotonicFit {
  std::vector<IsotonicBlock> blocks;
  std::size_t source_n = 0;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : blocks) {
      arr.push_back({{"forecast_lo", b.forecast_lo},
                     {"forecast_hi", b.forecast_hi},
                     {"fitted", b.fitted},
                     {"count", b.count}});
    }
    return arr;
  }

  static IsotonicFit from_json(const nlohmann::json& arr) {
    IsotonicFit fit;
    for (const auto& b : arr) {
      fit.blocks.push_back({b.at("forecast_lo").get<double>(), b.at("forecast_hi").get<double>(),
                            b.at("fitted").get<double>(), b.at("count").get<std::size_t>()});
      fit.source_n += fit.blocks.back().count;
    }
    return fit;
  }
};

namespace detail {

// Pooled unit: `events` out of `count` pairs over [lo, hi].
struct PoolUnit {
  double lo;
  double hi;
  double events;
  double count;
};

// a.events / a.count >= b.events / b.count, exact for integer tallies.
inline bool mean_not_below(const PoolUnit& a, const PoolUnit& b) {
  return a.events * b.count >= b.events * a.count;
}

// Stable order of pair indices by forecast value, ties broken by index.
inline std::vector<std::size_t> forecast_order(const PairSet& pairs) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto x = pairs.forecasts();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  return order;
}

}  // namespace detail

// Ties in the forecast are pooled up front, so equal forecasts always share a
// fitted value. Adjacent blocks with equal means are merged, which makes the
// fitted values strictly increasing.
inline IsotonicFit pav_fit(const PairSet& pairs) {
  require_nonempty(pairs, "pav_fit");
  const auto order = detail::forecast_order(pairs);
  const auto x = pairs.forecasts();
  const auto y = pairs.outcomes();

  std::vector<detail::PoolUnit> stack;
  stack.reserve(pairs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    detail::PoolUnit u{x[order[i]], x[order[i]], 0.0, 0.0};
    while (i < order.size() && x[order[i]] == u.lo) {
      u.events += y[order[i]];
      u.count += 1.0;
      ++i;
    }
    while (!stack.empty() && detail::mean_not_below(stack.back(), u)) {
      const auto& prev = stack.back();
      u = {prev.lo, u.hi, prev.events + u.events, prev.count + u.count};
      stack.pop_back();
    }
    stack.push_back(u);
  }

  IsotonicFit fit;
  fit.source_n = pairs.size();
  fit.blocks.reserve(stack.size());
  for (const auto& u : stack) {
    fit.blocks.push_back({u.lo, u.hi, u.events / u.count, static_cast<std::size_t>(u.count)});
  }
  return fit;
}

// Recalibration map as a right-continuous step function: a forecast takes
// the value of the last block starting at or below it; forecasts below the
// first block take the first value.
inline double apply_fit(const IsotonicFit& fit, double x) {
  if (fit.blocks.empty()) throw EmptyDataError("apply_fit: empty isotonic fit");
  auto it = std::upper_bound(fit.blocks.begin(), fit.blocks.end(), x,
                             [](double v, const IsotonicBlock& b) { return v < b.forecast_lo; });
  if (it == fit.blocks.begin()) return fit.blocks.front().fitted;
  return std::prev(it)->fitted;
}

// In-sample recalibrated forecasts, in pair order.
inline std::vector<double> recalibrated_forecasts(const PairSet& pairs, const IsotonicFit& fit) {
  std::vector<double> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = apply_fit(fit, pairs.forecast(i));
  return out;
}

// Replaces every forecast with its in-sample PAV fitted value.
inline PairSet recalibrate(const PairSet& pairs) {
  const IsotonicFit fit = pav_fit(pairs);
  return pairs.with_forecasts(recalibrated_forecasts(pairs, fit));
}

}  // namespace fcv
