#pragma once

// Synthetic experiment: true event probabilities p_i ~ Beta(a, b) rescaled
// to [lo, hi], outcomes y_i ~ Bernoulli(p_i), and four forecast systems
//
//   Ideal  = p_i
//   Under  = p_i / 2
//   Over   = min(2 p_i, 1)
//   Jitter = clip(p_i + r_i, 0, 1),  r_i ~ Normal(0, jitter_sd)
//
// Defaults (Beta(1,3) on [0, 0.5], sd 0.1) give base rate 1/8.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "json.hpp"

#include "fcverify/decomposition.hpp"
#include "fcverify/diagnostics.hpp"
#include "fcverify/errors.hpp"
#include "fcverify/pairs.hpp"
#include "fcverify/random.hpp"
#include "fcverify/scoring.hpp"

namespace fcv {

struct SyntheticConfig {
  std::size_t n_trials = 10'000'000;
  std::uint64_t seed = 1;
  double beta_a = 1.0;
  double beta_b = 3.0;
  double support_lo = 0.0;
  double support_hi = 0.5;
  double jitter_sd = 0.1;

  void validate() const {
    if (n_trials < 1) throw ValidationError("synthetic experiment needs at least one trial");
    if (!(beta_a > 0.0) || !(beta_b > 0.0)) throw ValidationError("beta shapes must be positive");
    if (!(support_lo >= 0.0 && support_lo < support_hi && support_hi <= 1.0)) {
      throw ValidationError("support must satisfy 0 <= lo < hi <= 1");
    }
    if (!(jitter_sd >= 0.0) || !std::isfinite(jitter_sd)) {
      throw ValidationError("jitter standard deviation must be nonnegative");
    }
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"n_trials", n_trials},
            {"seed", seed},
            {"beta", {beta_a, beta_b}},
            {"support", {support_lo, support_hi}},
            {"jitter_sd", jitter_sd}};
  }
};

// Substream tags; each stream is split into fixed-size chunks with their own
// derived seeds, so results do not depend on the number of worker threads.
enum class SyntheticStream : std::uint64_t { probability = 1, outcome = 2, jitter = 3 };
inline constexpr std::size_t kSyntheticChunk = std::size_t{1} << 16;

namespace detail {

template <class Fn>
void for_each_chunk(std::size_t n, Fn&& fn) {
  const std::size_t chunks = (n + kSyntheticChunk - 1) / kSyntheticChunk;
  const std::size_t workers =
      std::min<std::size_t>(std::max(1U, std::thread::hardware_concurrency()), chunks);
  auto run = [&](std::size_t w) {
    for (std::size_t c = w; c < chunks; c += workers) {
      fn(c, c * kSyntheticChunk, std::min(n, (c + 1) * kSyntheticChunk));
    }
  };
  if (workers <= 1) {
    run(0);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Inverse CDF of Beta(a, b) on [lo, hi]. Closed form when a or b is 1.
inline double beta_quantile(double u, double a, double b, double lo, double hi) {
  double z = 0.0;
  if (a == 1.0 && b == 3.0) {
    z = 1.0 - std::cbrt(1.0 - u);
  } else if (a == 1.0) {
    z = 1.0 - std::pow(1.0 - u, 1.0 / b);
  } else if (b == 1.0) {
    z = std::pow(u, 1.0 / a);
  } else {
    z = boost::math::ibeta_inv(a, b, u);
  }
  return lo + (hi - lo) * z;
}

inline std::vector<double> sample_probabilities(const SyntheticConfig& cfg) {
  cfg.validate();
  std::vector<double> p(cfg.n_trials);
  detail::for_each_chunk(cfg.n_trials, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Engine rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SyntheticStream::probability), c));
    for (std::size_t i = begin; i < end; ++i) {
      p[i] = beta_quantile(uniform01(rng), cfg.beta_a, cfg.beta_b, cfg.support_lo, cfg.support_hi);
    }
  });
  return p;
}

struct SyntheticSystems {
  std::vector<double> probabilities;
  PairSet ideal;
  PairSet under;
  PairSet over;
  PairSet jitter;

  static constexpr std::array<const char*, 4> names{"Ideal", "Under", "Over", "Jitter"};

  [[nodiscard]] std::array<const PairSet*, 4> all() const {
    return {&ideal, &under, &over, &jitter};
  }
};

inline SyntheticSystems make_systems(std::vector<double> p, const SyntheticConfig& cfg) {
  cfg.validate();
  const std::size_t n = p.size();
  for (double v : p) {
    if (!is_probability(v)) throw ValidationError("true probability outside [0,1]");
  }
  std::vector<std::uint8_t> y(n);
  std::vector<double> under(n), over(n), jitter(n);
  detail::for_each_chunk(n, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Engine outcome_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SyntheticStream::outcome), c));
    Engine noise_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SyntheticStream::jitter), c));
    for (std::size_t i = begin; i < end; ++i) {
      y[i] = uniform01(outcome_rng) < p[i] ? 1 : 0;
      under[i] = p[i] / 2.0;
      over[i] = std::min(2.0 * p[i], 1.0);
      const double r = cfg.jitter_sd * normal_quantile(uniform_open01(noise_rng));
      jitter[i] = std::clamp(p[i] + r, 0.0, 1.0);
    }
  });
  SyntheticSystems s;
  s.ideal = PairSet(p, y);
  s.under = PairSet(std::move(under), y);
  s.over = PairSet(std::move(over), y);
  s.jitter = PairSet(std::move(jitter), std::move(y));
  s.probabilities = std::move(p);
  return s;
}

inline SyntheticSystems make_systems(const SyntheticConfig& cfg) {
  return make_systems(sample_probabilities(cfg), cfg);
}

struct SystemStats {
  std::string name;
  double max_csi = 0.0;
  double max_csi_theta = 0.0;
  double auc_pr = 0.0;
  double mean_brier = 0.0;
  double auc_roc = 0.0;
  Decomposition brier;
};

struct ExperimentResult {
  SyntheticConfig config;
  double base_rate = 0.0;
  std::vector<SystemStats> systems;

  [[nodiscard]] const SystemStats& system(const std::string& name) const {
    for (const auto& s : systems) {
      if (s.name == name) return s;
    }
    throw ValidationError("unknown synthetic system '" + name + "'");
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["config"] = config.to_json();
    j["base_rate"] = base_rate;
    j["systems"] = nlohmann::json::array();
    for (const auto& s : systems) {
      j["systems"].push_back({{"name", s.name},
                              {"max_csi", s.max_csi},
                              {"max_csi_threshold", s.max_csi_theta},
                              {"auc_pr", s.auc_pr},
                              {"mean_brier", s.mean_brier},
                              {"auc_roc", s.auc_roc},
                              {"brier_decomposition",
                               {{"mcb", s.brier.mcb},
                                {"dsc", s.brier.dsc},
                                {"unc", s.brier.unc}}}});
    }
    return j;
  }
};

inline SystemStats system_stats(const std::string& name, const PairSet& pairs) {
  SystemStats s;
  s.name = name;
  const auto best = max_csi(pairs);
  s.max_csi = best.csi;
  s.max_csi_theta = best.theta;
  s.auc_pr = auc_pr(pairs);
  s.brier = corp_decompose(pairs, ScoringRule::brier());
  s.mean_brier = s.brier.mean_score;
  s.auc_roc = roc_curve(pairs, false).auc;
  return s;
}

inline ExperimentResult run_experiment(const SyntheticConfig& cfg, const SyntheticSystems& sys) {
  ExperimentResult r;
  r.config = cfg;
  r.base_rate = base_rate(sys.ideal);
  const auto all = sys.all();
  for (std::size_t k = 0; k < all.size(); ++k) {
    r.systems.push_back(system_stats(SyntheticSystems::names[k], *all[k]));
  }
  return r;
}

inline ExperimentResult run_experiment(const SyntheticConfig& cfg) {
  return run_experiment(cfg, make_systems(cfg));
}

// Mean and standard error of each statistic over repeated experiments with
// seeds derived from cfg.seed.
struct RepeatedSummary {
  struct Moments {
    double mean = 0.0;
    double std_error = 0.0;
  };
  struct PerSystem {
    std::string name;
    Moments max_csi, auc_pr, mean_brier, auc_roc;
  };
  std::size_t repetitions = 0;
  std::vector<PerSystem> systems;
};

inline RepeatedSummary run_repeated(const SyntheticConfig& cfg, std::size_t repetitions) {
  if (repetitions < 2) throw ValidationError("repeated experiment needs at least 2 repetitions");
  std::vector<std::array<std::vector<double>, 4>> stats(4);
  for (std::size_t r = 0; r < repetitions; ++r) {
    SyntheticConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 0x5e9eULL, r);
    const auto res = run_experiment(c);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& s = res.systems[k];
      stats[k][0].push_back(s.max_csi);
      stats[k][1].push_back(s.auc_pr);
      stats[k][2].push_back(s.mean_brier);
      stats[k][3].push_back(s.auc_roc);
    }
  }
  auto moments = [](const std::vector<double>& v) {
    const auto n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return RepeatedSummary::Moments{mean, std::sqrt(ss / (n - 1.0) / n)};
  };
  RepeatedSummary out;
  out.repetitions = repetitions;
  for (std::size_t k = 0; k < 4; ++k) {
    out.systems.push_back({SyntheticSystems::names[k], moments(stats[k][0]), moments(stats[k][1]),
                           moments(stats[k][2]), moments(stats[k][3])});
  }
  return out;
}

}  // namespace fcv
