#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "fcverify/inference.hpp"
#include "fcverify/random.hpp"

using namespace fcv;

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST(NormalQuantile, MatchesBoost) {
  const boost::math::normal dist;
  for (double p : {1e-12, 1e-6, 0.001, 0.025, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999, 1 - 1e-9}) {
    EXPECT_NEAR(normal_quantile(p), boost::math::quantile(dist, p), 1e-9) << p;
    EXPECT_NEAR(normal_cdf(boost::math::quantile(dist, p)), p, 1e-12);
  }
  EXPECT_TRUE(std::isinf(normal_quantile(0.0)));
  EXPECT_TRUE(std::isnan(normal_quantile(1.5)));
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s) {
    for (std::uint64_t k = 0; k < 4; ++k) {
      for (std::uint64_t i = 0; i < 64; ++i) seen.insert(derive_seed(s, k, i));
    }
  }
  EXPECT_EQ(seen.size(), 4U * 4U * 64U);
}

TEST(BlockLength, SquareRootRule) {
  EXPECT_EQ(auto_block_length(100), 10U);
  EXPECT_EQ(auto_block_length(101), 11U);
  EXPECT_EQ(auto_block_length(1), 1U);
  EXPECT_EQ(auto_block_length(2), 2U);
  EXPECT_EQ(parse_block_lengths("auto"), std::nullopt);
  EXPECT_EQ(parse_block_lengths("3,1,2"), (std::array<std::size_t, 3>{3, 1, 2}));
  EXPECT_THROW(parse_block_lengths("3,0,2"), ValidationError);
  EXPECT_THROW(parse_block_lengths("3,1"), ValidationError);
}

TEST(BlockResampler, TilesAreContiguousWrapAroundBlocks) {
  const Shape3 shape{10, 3, 4};
  const BlockResampler r(shape, {4, 2, 3});
  Engine rng(99);
  std::vector<std::size_t> src;
  for (int trial = 0; trial < 20; ++trial) {
    r.draw(rng, src);
    ASSERT_EQ(src.size(), shape.size());
    for (std::size_t t = 0; t < shape.time; ++t) {
      for (std::size_t y = 0; y < shape.y; ++y) {
        for (std::size_t x = 0; x < shape.x; ++x) {
          const std::size_t s = src[shape.flat(t, y, x)];
          ASSERT_LT(s, shape.size());
          // Within a tile, a step along an axis advances the source by one (mod length).
          if (t % 4 != 0) {
            const std::size_t prev = src[shape.flat(t - 1, y, x)];
            EXPECT_EQ(s / shape.cells(), (prev / shape.cells() + 1) % shape.time);
            EXPECT_EQ(s % shape.cells(), prev % shape.cells());
          }
          if (x % 3 != 0) {
            const std::size_t prev = src[shape.flat(t, y, x - 1)];
            EXPECT_EQ(s % shape.x, (prev % shape.x + 1) % shape.x);
          }
        }
      }
    }
  }
}

TEST(Bootstrap, ConstantFieldZeroWidth) {
  const std::vector<double> v(60, 0.37);
  BootstrapConfig cfg;
  cfg.n_resamples = 200;
  const auto ci = circular_block_bootstrap(v, Shape3{20, 3, 1}, mean_of, cfg);
  EXPECT_DOUBLE_EQ(ci.point, 0.37);
  EXPECT_DOUBLE_EQ(ci.lo, 0.37);
  EXPECT_DOUBLE_EQ(ci.hi, 0.37);
}

TEST(Bootstrap, SingleResampleIsDegenerate) {
  std::vector<double> v(50);
  std::iota(v.begin(), v.end(), 0.0);
  BootstrapConfig cfg;
  cfg.n_resamples = 1;
  cfg.seed = 8;
  const auto ci = circular_block_bootstrap(v, Shape3{50, 1, 1}, mean_of, cfg);
  EXPECT_EQ(ci.lo, ci.hi);
}

TEST(Bootstrap, DeterministicGivenSeed) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> v(200);
  for (auto& x : v) x = g(rng);
  BootstrapConfig cfg;
  cfg.n_resamples = 300;
  cfg.seed = 12345;
  const auto a = circular_block_bootstrap(v, Shape3{50, 2, 2}, mean_of, cfg);
  const auto b = circular_block_bootstrap(v, Shape3{50, 2, 2}, mean_of, cfg);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  cfg.seed = 54321;
  const auto c = circular_block_bootstrap(v, Shape3{50, 2, 2}, mean_of, cfg);
  EXPECT_NE(a.lo, c.lo);
  EXPECT_LT(a.lo, a.point);
  EXPECT_GT(a.hi, a.point);
}

TEST(Bootstrap, FailedDrawsAreRetriedThenError) {
  std::vector<double> v(30);
  std::iota(v.begin(), v.end(), 0.0);
  BootstrapConfig cfg;
  cfg.n_resamples = 20;
  cfg.max_retries = 1000;
  int calls = 0;
  // Fails on every other call after the point estimate.
  const auto ci = circular_block_bootstrap(
      v, Shape3{30, 1, 1},
      [&](std::span<const double> s) {
        if (++calls > 1 && calls % 2 == 0) throw DataError("flaky");
        return mean_of(s);
      },
      cfg);
  EXPECT_GT(ci.failed_draws, 0U);
  cfg.max_retries = 2;
  EXPECT_THROW(circular_block_bootstrap(
                   v, Shape3{30, 1, 1},
                   [&](std::span<const double> s) -> double {
                     if (s.data() != v.data()) throw DataError("always");
                     return 0.0;
                   },
                   cfg),
               DataError);
}

TEST(Bootstrap, ValidatesConfig) {
  std::vector<double> v(4, 1.0);
  BootstrapConfig cfg;
  cfg.level = 1.0;
  EXPECT_THROW(circular_block_bootstrap(v, Shape3{4, 1, 1}, mean_of, cfg), ValidationError);
  cfg.level = 0.9;
  cfg.n_resamples = 0;
  EXPECT_THROW(circular_block_bootstrap(v, Shape3{4, 1, 1}, mean_of, cfg), ValidationError);
  cfg.n_resamples = 5;
  EXPECT_THROW(circular_block_bootstrap(v, Shape3{5, 1, 1}, mean_of, cfg), AlignmentError);
}

TEST(SortedQuantile, LinearInterpolation) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.125), 1.5);
}

TEST(PairGrid, MapsCellsAndSkipsMissing) {
  const PairSet p({0.1, 0.2, 0.3}, {0, 1, 0}, {0, 0, 1}, {0, 1, 1}, Shape3{2, 1, 2});
  const PairGrid g(p);
  EXPECT_EQ(g.shape(), (Shape3{2, 1, 2}));
  const std::vector<std::size_t> src{3, 2, 1, 0};
  EXPECT_EQ(g.pairs_in(src), (std::vector<std::size_t>{2, 1, 0}));
  const PairGrid series(PairSet({0.1, 0.2}, {0, 1}));
  EXPECT_EQ(series.shape(), (Shape3{2, 1, 1}));
}

TEST(DmLagCap, Rule) {
  EXPECT_EQ(dm_lag_cap(1000, 1), 10U);
  EXPECT_EQ(dm_lag_cap(1000, 15), 14U);
  EXPECT_EQ(dm_lag_cap(999, 1), 9U);
  EXPECT_EQ(dm_lag_cap(3, 10), 2U);
}

TEST(DmTest, IdenticalSystems) {
  const std::vector<double> zero(40, 0.0);
  const auto r = dm_test(zero, 1);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.lo, 0.0);
  EXPECT_EQ(r.hi, 0.0);
}

TEST(DmTest, Errors) {
  EXPECT_THROW(dm_test(std::vector<double>{1.0}, 1), InsufficientDataError);
  EXPECT_THROW(dm_test(std::vector<double>{1.0, 2.0}, 0), ValidationError);
  EXPECT_THROW(dm_test(std::vector<double>{1.0, NAN}, 1), ValidationError);
}

TEST(DmTest, IidSeriesVarianceNearSampleVariance) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<double> v(20000);
  for (auto& x : v) x = g(rng);
  const auto r = dm_test(v, 1);
  EXPECT_NEAR(r.variance, 4.0, 0.4);
  EXPECT_EQ(r.lag_cap, 27U);
}

TEST(DmTest, HandComputedSmallSeries) {
  // n = 8, K = 2; autocovariances by hand.
  const std::vector<double> d{1, 3, 2, 5, 4, 6, 5, 8};
  const double m = 34.0 / 8.0;
  auto gamma = [&](std::size_t k) {
    double s = 0;
    for (std::size_t t = k; t < d.size(); ++t) s += (d[t] - m) * (d[t - k] - m);
    return s / 8.0;
  };
  const auto r = dm_test(d, 1);
  EXPECT_EQ(r.lag_cap, 2U);
  EXPECT_NEAR(r.variance, gamma(0) + 2 * gamma(1) + 2 * gamma(2), 1e-12);
  EXPECT_NEAR(r.statistic, m / std::sqrt(r.variance / 8.0), 1e-12);
  const auto [lo50, hi50] = r.interval(0.5);
  EXPECT_NEAR(hi50 - m, 0.6744897501960817 * std::sqrt(r.variance / 8.0), 1e-9);
  EXPECT_NEAR(lo50 + hi50, 2 * m, 1e-12);
}

TEST(DmTest, NegativeLagSumTruncated) {
  // Alternating series: gamma(1) strongly negative.
  std::vector<double> d;
  for (int i = 0; i < 27; ++i) d.push_back(i % 2 ? 1.0 : -1.0);
  const auto r = dm_test(d, 1);
  EXPECT_GE(r.variance, 0.0);
  EXPECT_LT(r.lags_used, r.lag_cap);
}

TEST(DmTest, ScaleAndShiftBehaviour) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.1, 1.0);
  std::vector<double> v(300);
  for (auto& x : v) x = g(rng);
  const auto a = dm_test(v, 2);
  std::vector<double> w(v);
  for (auto& x : w) x *= 7.5;
  const auto b = dm_test(w, 2);
  EXPECT_NEAR(a.statistic, b.statistic, 1e-9);
  EXPECT_NEAR(b.lo, 7.5 * a.lo, 1e-9);
  std::vector<double> neg(v);
  for (auto& x : neg) x = -x;
  EXPECT_NEAR(dm_test(neg, 2).statistic, -a.statistic, 1e-12);
}
