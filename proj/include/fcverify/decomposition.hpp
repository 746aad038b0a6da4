#pragma once

// CORP decomposition of a mean score into miscalibration (MCB),
// discrimination (DSC) and uncertainty (UNC):
//
//   mean = MCB - DSC + UNC,  MCB = mean - S_c,  DSC = S_r - S_c,  UNC = S_r
//
// where S_c scores the PAV-recalibrated forecasts and S_r the best constant.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fcverify/dataset.hpp"
#include "fcverify/errors.hpp"
#include "fcverify/inference.hpp"
#include "fcverify/pairs.hpp"
#include "fcverify/recalibration.hpp"
#include "fcverify/scoring.hpp"

namespace fcv {

struct Decomposition {
  ScoringRule rule;
  double mean_score = 0.0;
  double mcb = 0.0;
  double dsc = 0.0;
  double unc = 0.0;
  double s_calibrated = 0.0;
  double s_reference = 0.0;
  double best_constant = 0.0;
};

// The empirical base rate. It minimizes the mean of every rule in scope
// over constant forecasts; for elementary and FIRM rules it is one of
// possibly many minimizers.
inline double best_constant(const PairSet& pairs, const ScoringRule& /*rule*/) {
  return base_rate(pairs);
}

inline Decomposition corp_decompose(const PairSet& pairs, const ScoringRule& rule,
                                    InfinityPolicy inf = InfinityPolicy::reject) {
  require_nonempty(pairs, "corp_decompose");
  Decomposition d;
  d.rule = rule;
  d.mean_score = mean_score(pairs, rule, inf);
  const IsotonicFit fit = pav_fit(pairs);
  d.s_calibrated = mean_score(recalibrated_forecasts(pairs, fit), pairs.outcomes(), rule, inf);
  d.best_constant = best_constant(pairs, rule);
  const std::vector<double> constant(pairs.size(), d.best_constant);
  d.s_reference = mean_score(constant, pairs.outcomes(), rule, inf);
  d.mcb = d.mean_score - d.s_calibrated;
  d.dsc = d.s_reference - d.s_calibrated;
  d.unc = d.s_reference;
  return d;
}

// Mean score of an external reference forecast (e.g. climatology) at the
// positions of `pairs`.
inline double reference_score(const PairSet& pairs, const GridField& reference,
                              const ScoringRule& rule) {
  require_nonempty(pairs, "reference_score");
  if (!pairs.has_positions() || !pairs.shape()) {
    throw AlignmentError("reference_score needs pairs with grid positions");
  }
  if (!(*pairs.shape() == reference.shape())) {
    throw AlignmentError("reference grid shape differs from the pairs' grid");
  }
  const Shape3 s = reference.shape();
  std::vector<double> ref(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto cell = static_cast<std::size_t>(pairs.time_index()[i]) * s.cells() +
                      static_cast<std::size_t>(pairs.cell_index()[i]);
    if (reference.missing(cell)) {
      throw AlignmentError("reference forecast missing at pair " + std::to_string(i));
    }
    ref[i] = reference.values[cell];
  }
  return mean_score(ref, pairs.outcomes(), rule);
}

struct DiagramPoint {
  std::string system;
  int lead_day = 1;
  Decomposition decomposition;
  std::optional<CiResult> ci_mcb;
  std::optional<CiResult> ci_dsc;
};

// MCB and DSC intervals from one set of block resamples; each resample
// refits PAV and the base rate.
inline std::pair<CiResult, CiResult> bootstrap_mcb_dsc(const PairSet& pairs,
                                                       const ScoringRule& rule,
                                                       const BootstrapConfig& cfg) {
  const PairGrid grid(pairs);
  auto ci = circular_block_bootstrap_multi(
      grid.shape(),
      [&](std::span<const std::size_t> source) {
        const auto idx = grid.pairs_in(source);
        if (idx.empty()) throw EmptyDataError("resample holds no pairs");
        const auto d = corp_decompose(pairs.select(idx), rule);
        return std::vector<double>{d.mcb, d.dsc};
      },
      cfg);
  return {ci[0], ci[1]};
}

// One point per (system, lead day), with optional MCB/DSC intervals.
inline std::vector<DiagramPoint> diagram_points(const Dataset& ds, const ScoringRule& rule,
                                                const std::optional<BootstrapConfig>& bootstrap = {}) {
  std::vector<DiagramPoint> out;
  for (const auto& sys : ds.systems) {
    for (const auto& [lead, field] : sys.by_lead) {
      const PairSet pairs = flatten_pairs(field, ds.observation.at(lead));
      DiagramPoint p{sys.name, lead, corp_decompose(pairs, rule), std::nullopt, std::nullopt};
      if (bootstrap) {
        auto [mcb, dsc] = bootstrap_mcb_dsc(pairs, rule, *bootstrap);
        p.ci_mcb = mcb;
        p.ci_dsc = dsc;
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline std::vector<DiagramPoint> diagram_points(const DatasetManifest& manifest,
                                                const ScoringRule& rule,
                                                const std::optional<BootstrapConfig>& bootstrap = {},
                                                const LoadOptions& load = {}) {
  return diagram_points(load_dataset(manifest, load), rule, bootstrap);
}

}  // namespace fcv
