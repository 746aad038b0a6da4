#pragma once

// Circular block bootstrap over (time, y, x) grids and the Diebold-Mariano
// test for score-difference series.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fcverify/errors.hpp"
#include "fcverify/format.hpp"
#include "fcverify/pairs.hpp"
#include "fcverify/random.hpp"

namespace fcv {

struct BootstrapConfig {
  std::size_t n_resamples = 1000;
  std::uint64_t seed = 0;
  // Per-axis (time, y, x) block lengths; nullopt selects ceil(sqrt(axis length)).
  std::optional<std::array<std::size_t, 3>> block_lengths;
  double level = 0.95;
  // Redraws allowed per resample when the statistic fails on a draw.
  std::size_t max_retries = 100;

  void validate() const {
    if (n_resamples < 1) throw ValidationError("bootstrap needs at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level outside (0,1)");
    if (block_lengths) {
      for (auto b : *block_lengths) {
        if (b < 1) throw ValidationError("block lengths must be positive");
      }
    }
  }
};

// "auto" or "t,y,x".
inline std::optional<std::array<std::size_t, 3>> parse_block_lengths(const std::string& text) {
  if (text == "auto") return std::nullopt;
  auto parts = split(text, ',');
  if (parts.size() != 3) throw ValidationError("block lengths must be 'auto' or 't,y,x'");
  std::array<std::size_t, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    auto v = parse_int(trim(parts[i]));
    if (!v || *v < 1) throw ValidationError("block length '" + std::string(parts[i]) + "' invalid");
    out[i] = static_cast<std::size_t>(*v);
  }
  return out;
}

// ceil(sqrt(length)), at least 1 and at most the axis length.
inline std::size_t auto_block_length(std::size_t length) {
  if (length <= 1) return 1;
  auto b = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(length))));
  while ((b - 1) * (b - 1) >= length) --b;  // guard against sqrt rounding up
  while (b * b < length) ++b;
  return std::min(b, length);
}

inline std::array<std::size_t, 3> resolve_block_lengths(const Shape3& shape,
                                                        const BootstrapConfig& cfg) {
  const std::array<std::size_t, 3> dims{shape.time, shape.y, shape.x};
  std::array<std::size_t, 3> out{};
  for (std::size_t a = 0; a < 3; ++a) {
    out[a] = cfg.block_lengths ? std::min((*cfg.block_lengths)[a], std::max<std::size_t>(dims[a], 1))
                               : auto_block_length(dims[a]);
  }
  return out;
}

// Draws circular block resamples of a grid. The output grid is tiled by
// blocks; each tile copies a wrap-around block of the source whose start
// corner is uniform over the grid. Tiles overhanging the edge are trimmed.
class BlockResampler {
 public:
  BlockResampler(Shape3 shape, std::array<std::size_t, 3> block)
      : shape_(shape), block_(block) {
    if (shape.size() == 0) throw EmptyDataError("bootstrap over an empty grid");
  }

  [[nodiscard]] const Shape3& shape() const { return shape_; }
  [[nodiscard]] const std::array<std::size_t, 3>& block() const { return block_; }

  // source[i] is the flat source cell copied into output cell i.
  void draw(Engine& rng, std::vector<std::size_t>& source) const {
    const std::array<std::size_t, 3> dims{shape_.time, shape_.y, shape_.x};
    source.assign(shape_.size(), 0);
    for (std::size_t t0 = 0; t0 < dims[0]; t0 += block_[0]) {
      for (std::size_t y0 = 0; y0 < dims[1]; y0 += block_[1]) {
        for (std::size_t x0 = 0; x0 < dims[2]; x0 += block_[2]) {
          const std::size_t st = uniform_index(rng, dims[0]);
          const std::size_t sy = uniform_index(rng, dims[1]);
          const std::size_t sx = uniform_index(rng, dims[2]);
          const std::size_t te = std::min(t0 + block_[0], dims[0]);
          const std::size_t ye = std::min(y0 + block_[1], dims[1]);
          const std::size_t xe = std::min(x0 + block_[2], dims[2]);
          for (std::size_t t = t0; t < te; ++t) {
            const std::size_t tt = (st + t - t0) % dims[0];
            for (std::size_t y = y0; y < ye; ++y) {
              const std::size_t yy = (sy + y - y0) % dims[1];
              for (std::size_t x = x0; x < xe; ++x) {
                const std::size_t xx = (sx + x - x0) % dims[2];
                source[shape_.flat(t, y, x)] = shape_.flat(tt, yy, xx);
              }
            }
          }
        }
      }
    }
  }

 private:
  Shape3 shape_;
  std::array<std::size_t, 3> block_;
};

struct CiResult {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  std::size_t n_resamples = 0;
  std::size_t failed_draws = 0;
};

// Linear-interpolation quantile of sorted data.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptyDataError("quantile of empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Substream tag separating bootstrap draws from other users of the seed.
inline constexpr std::uint64_t kBootstrapStream = 0xb0075742ULL;

// Bootstraps several statistics from the same resamples. `statistic` maps a
// source-cell map (see BlockResampler::draw) to one value per statistic; a
// draw on which it throws fcv::Error or returns a non-finite value is redrawn.
// Percentile intervals; resample r always uses seed derive_seed(seed, stream, r).
inline std::vector<CiResult> circular_block_bootstrap_multi(
    const Shape3& shape,
    const std::function<std::vector<double>(std::span<const std::size_t>)>& statistic,
    const BootstrapConfig& cfg) {
  cfg.validate();
  const BlockResampler resampler(shape, resolve_block_lengths(shape, cfg));
  std::vector<std::size_t> identity(shape.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  const std::vector<double> point = statistic(identity);

  std::vector<std::vector<double>> draws(point.size());
  for (auto& d : draws) d.reserve(cfg.n_resamples);
  std::size_t failures = 0;
  std::vector<std::size_t> source;
  for (std::size_t r = 0; r < cfg.n_resamples; ++r) {
    Engine rng(derive_seed(cfg.seed, kBootstrapStream, r));
    bool ok = false;
    for (std::size_t attempt = 0; attempt <= cfg.max_retries && !ok; ++attempt) {
      resampler.draw(rng, source);
      std::vector<double> values;
      try {
        values = statistic(source);
      } catch (const Error&) {
        ++failures;
        continue;
      }
      if (values.size() != point.size() ||
          !std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        ++failures;
        continue;
      }
      for (std::size_t k = 0; k < values.size(); ++k) draws[k].push_back(values[k]);
      ok = true;
    }
    if (!ok) {
      throw DataError("bootstrap statistic failed on resample " + std::to_string(r) + " after " +
                      std::to_string(cfg.max_retries + 1) + " draws");
    }
  }

  std::vector<CiResult> out;
  const double tail = (1.0 - cfg.level) / 2.0;
  for (std::size_t k = 0; k < point.size(); ++k) {
    std::sort(draws[k].begin(), draws[k].end());
    out.push_back({point[k], sorted_quantile(draws[k], tail), sorted_quantile(draws[k], 1.0 - tail),
                   cfg.level, cfg.n_resamples, failures});
  }
  return out;
}

inline CiResult circular_block_bootstrap(
    const Shape3& shape, const std::function<double(std::span<const std::size_t>)>& statistic,
    const BootstrapConfig& cfg) {
  return circular_block_bootstrap_multi(
             shape, [&](std::span<const std::size_t> src) { return std::vector<double>{statistic(src)}; },
             cfg)
      .front();
}

// Bootstraps a statistic of a grid-shaped sample. The statistic receives the
// resampled array in the original (time, y, x) layout; missing cells are NaN.
inline CiResult circular_block_bootstrap(
    std::span<const double> values, const Shape3& shape,
    const std::function<double(std::span<const double>)>& statistic, const BootstrapConfig& cfg) {
  if (values.size() != shape.size()) {
    throw AlignmentError("sample has " + std::to_string(values.size()) + " values, grid has " +
                         std::to_string(shape.size()) + " cells");
  }
  std::vector<double> buf(values.size());
  return circular_block_bootstrap(
      shape,
      [&](std::span<const std::size_t> src) {
        for (std::size_t i = 0; i < src.size(); ++i) buf[i] = values[src[i]];
        return statistic(buf);
      },
      cfg);
}

// Maps grid cells to pairs so pair statistics can be block-bootstrapped.
// Pairs without positions are treated as a time series in pair order.
class PairGrid {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  explicit PairGrid(const PairSet& pairs) {
    require_nonempty(pairs, "bootstrap");
    if (pairs.has_positions() && pairs.shape()) {
      shape_ = *pairs.shape();
      pair_at_.assign(shape_.size(), npos);
      const auto ti = pairs.time_index();
      const auto ci = pairs.cell_index();
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto cell = static_cast<std::size_t>(ti[i]) * shape_.cells() +
                          static_cast<std::size_t>(ci[i]);
        if (cell >= pair_at_.size() || pair_at_[cell] != npos) {
          throw AlignmentError("pair positions do not fit the grid shape");
        }
        pair_at_[cell] = i;
      }
    } else {
      shape_ = {pairs.size(), 1, 1};
      pair_at_.resize(pairs.size());
      std::iota(pair_at_.begin(), pair_at_.end(), std::size_t{0});
    }
  }

  [[nodiscard]] const Shape3& shape() const { return shape_; }

  // Pair indices present in a resample, in output-cell order.
  [[nodiscard]] std::vector<std::size_t> pairs_in(std::span<const std::size_t> source) const {
    std::vector<std::size_t> idx;
    idx.reserve(source.size());
    for (std::size_t s : source) {
      if (pair_at_[s] != npos) idx.push_back(pair_at_[s]);
    }
    return idx;
  }

 private:
  Shape3 shape_;
  std::vector<std::size_t> pair_at_;
};

// ---------------------------------------------------------------------------
// Diebold-Mariano

struct DmResult {
  double mean_diff = 0.0;
  double statistic = 0.0;
  double variance = 0.0;  // long-run variance estimate of the series
  std::size_t n = 0;
  std::size_t lag_cap = 0;
  std::size_t lags_used = 0;
  double level = 0.95;
  double lo = 0.0;
  double hi = 0.0;

  // Interval at another level from the same variance estimate.
  [[nodiscard]] std::pair<double, double> interval(double lvl) const {
    const double z = normal_quantile(0.5 + lvl / 2.0);
    const double half = z * std::sqrt(variance / static_cast<double>(n));
    return {mean_diff - half, mean_diff + half};
  }
};

// Lag cap max(lead_day - 1, floor(n^(1/3))), limited to n - 1.
inline std::size_t dm_lag_cap(std::size_t n, int lead_day) {
  auto cube = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n))));
  while ((cube + 1) * (cube + 1) * (cube + 1) <= n) ++cube;
  while (cube * cube * cube > n) --cube;
  const std::size_t h = lead_day > 1 ? static_cast<std::size_t>(lead_day - 1) : 0;
  return std::min(std::max(h, cube), n - 1);
}

// Long-run variance gamma(0) + 2 sum_{k=1}^K gamma(k) from empirical
// autocovariances. When the full sum is negative the lag sum is cut at the
// last lag whose partial sum is still nonnegative.
inline DmResult dm_test(std::span<const double> diff, int lead_day, double level = 0.95) {
  const std::size_t n = diff.size();
  if (n < 2) throw InsufficientDataError("Diebold-Mariano test needs at least 2 time steps");
  if (lead_day < 1) throw ValidationError("lead day must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level outside (0,1)");
  for (double d : diff) {
    if (!std::isfinite(d)) throw ValidationError("score-difference series has non-finite values");
  }
  DmResult r;
  r.n = n;
  r.level = level;
  r.mean_diff = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t t = k; t < n; ++t) s += (diff[t] - r.mean_diff) * (diff[t - k] - r.mean_diff);
    return s / static_cast<double>(n);
  };
  r.lag_cap = dm_lag_cap(n, lead_day);
  double partial = autocov(0);
  double last_ok = partial;
  std::size_t last_ok_lag = 0;
  for (std::size_t k = 1; k <= r.lag_cap; ++k) {
    partial += 2.0 * autocov(k);
    if (partial >= 0.0) {
      last_ok = partial;
      last_ok_lag = k;
    }
  }
  if (partial >= 0.0) {
    r.variance = partial;
    r.lags_used = r.lag_cap;
  } else {
    r.variance = last_ok;
    r.lags_used = last_ok_lag;
  }
  const double se = std::sqrt(r.variance / static_cast<double>(n));
  if (se > 0.0) {
    r.statistic = r.mean_diff / se;
  } else if (r.mean_diff == 0.0) {
    r.statistic = 0.0;
  } else {
    r.statistic = std::copysign(std::numeric_limits<double>::infinity(), r.mean_diff);
  }
  std::tie(r.lo, r.hi) = r.interval(level);
  return r;
}

}  // namespace fcv
