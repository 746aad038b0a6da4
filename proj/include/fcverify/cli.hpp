#pragma once

// Command-line front end. Every subcommand writes fixed-name files under the
// output directory plus a run.json provenance record.
//
// Exit codes: 0 success, 1 usage or validation error, 2 data error.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "fcverify/dataset.hpp"
#include "fcverify/decomposition.hpp"
#include "fcverify/diagnostics.hpp"
#include "fcverify/errors.hpp"
#include "fcverify/format.hpp"
#include "fcverify/inference.hpp"
#include "fcverify/recalibration.hpp"
#include "fcverify/scoring.hpp"
#include "fcverify/svg.hpp"
#include "fcverify/synthetic.hpp"
#include "fcverify/version.hpp"

namespace fcv::cli {

// ---------------------------------------------------------------------------
// Output helpers

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
      : out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    bool first = true;
    for (auto h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  CsvWriter& operator<<(const std::string& s) { return cell(s); }
  CsvWriter& operator<<(const char* s) { return cell(s); }
  CsvWriter& operator<<(double v) { return cell(format_double(v)); }
  CsvWriter& operator<<(int v) { return cell(std::to_string(v)); }
  CsvWriter& operator<<(std::size_t v) { return cell(std::to_string(v)); }
  CsvWriter& operator<<(std::int64_t v) { return cell(std::to_string(v)); }
  CsvWriter& operator<<(const std::optional<double>& v) {
    return cell(v ? format_double(*v) : std::string{});
  }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  CsvWriter& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  bool first_ = true;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 14> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

// Sanitized file-name fragment.
inline std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

inline std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  for (auto part : split(text, ',')) {
    auto v = parse_double(trim(part));
    if (!v) throw ValidationError(std::string("invalid ") + what + " value '" + std::string(part) + "'");
    out.push_back(*v);
  }
  return out;
}

// Grid step, step, 2*step, ... strictly below 1 (plus 1 when `include_one`).
inline std::vector<double> regular_grid(double step, bool include_one) {
  if (!(step > 0.0 && step < 1.0)) throw ValidationError("grid step must lie in (0,1)");
  std::vector<double> g;
  const auto n = static_cast<int>(std::floor(1.0 / step + 1e-9));
  for (int i = 1; i <= n; ++i) {
    const double v = std::round(i * step * 1e9) / 1e9;
    if (v < 1.0 || (include_one && v == 1.0)) g.push_back(v);
  }
  if (include_one && (g.empty() || g.back() != 1.0)) g.push_back(1.0);
  return g;
}

// ---------------------------------------------------------------------------
// Options shared by dataset-driven subcommands

struct DataOptions {
  std::string manifest;
  std::string missing = "joint";
  bool round_percent = false;
  std::optional<int> lead_day;

  void add_to(CLI::App* app) {
    app->add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
    app->add_option("--missing", missing, "Missing-data union: joint | per-lead-day")
        ->check(CLI::IsMember({"joint", "per-lead-day"}));
    app->add_flag("--round-percent", round_percent, "Round forecasts to whole percent on load");
    app->add_option("--lead-day", lead_day, "Restrict to one lead day");
  }

  [[nodiscard]] LoadOptions load_options() const {
    return {missing == "joint" ? MissingPolicy::joint : MissingPolicy::per_lead_day, round_percent};
  }
};

struct BootstrapOptions {
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
  std::string block = "auto";
  double level = 0.95;

  void add_to(CLI::App* app) {
    app->add_option("--bootstrap", resamples, "Number of circular block bootstrap resamples");
    app->add_option("--seed", seed, "Bootstrap seed");
    app->add_option("--block", block, "Block lengths: auto | t,y,x");
    app->add_option("--level", level, "Confidence level");
  }

  [[nodiscard]] std::optional<BootstrapConfig> config() const {
    if (resamples == 0) return std::nullopt;
    BootstrapConfig c;
    c.n_resamples = resamples;
    c.seed = seed;
    c.block_lengths = parse_block_lengths(block);
    c.level = level;
    c.validate();
    return c;
  }
};

struct Context {
  std::filesystem::path out_dir;
  bool svg = false;
  std::vector<std::filesystem::path> inputs;
  nlohmann::json extra = nlohmann::json::object();
};

// (system, lead day, pairs) for every selected combination, manifest order.
struct SelectedPairs {
  std::string system;
  int lead_day;
  PairSet pairs;
};

inline std::vector<SelectedPairs> select_pairs(const Dataset& ds, const DataOptions& opt) {
  std::vector<SelectedPairs> out;
  for (const auto& s : ds.systems) {
    for (const auto& [lead, field] : s.by_lead) {
      if (opt.lead_day && *opt.lead_day != lead) continue;
      out.push_back({s.name, lead, flatten_pairs(field, ds.observation.at(lead))});
    }
  }
  if (out.empty()) throw ValidationError("no system has the requested lead day");
  return out;
}

inline Dataset open_dataset(const DataOptions& opt, Context& ctx, DatasetManifest* manifest_out = nullptr) {
  const DatasetManifest m = load_manifest(opt.manifest);
  ctx.inputs.emplace_back(opt.manifest);
  for (const auto& s : m.systems) ctx.inputs.push_back(s.path);
  ctx.inputs.push_back(m.observation);
  if (m.reference) ctx.inputs.push_back(*m.reference);
  if (m.region_mask) ctx.inputs.push_back(*m.region_mask);
  if (manifest_out) *manifest_out = m;
  return load_dataset(m, opt.load_options());
}

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_score(const DataOptions& dopt, const std::string& rule_text, bool allow_inf,
                      Context& ctx) {
  const ScoringRule rule = ScoringRule::parse(rule_text);
  const Dataset ds = open_dataset(dopt, ctx);
  const auto inf = allow_inf ? InfinityPolicy::propagate : InfinityPolicy::reject;
  CsvWriter csv(ctx.out_dir / "score.csv", {"system", "lead_day", "rule", "n", "mean_score"});
  for (const auto& sp : select_pairs(ds, dopt)) {
    csv << sp.system << sp.lead_day << rule.label() << sp.pairs.size()
        << mean_score(sp.pairs, rule, inf);
    csv.end_row();
  }
  for (const auto& [lead, ref] : ds.reference) {
    if (dopt.lead_day && *dopt.lead_day != lead) continue;
    const PairSet pairs = flatten_pairs(ref, ds.observation.at(lead));
    csv << "reference" << lead << rule.label() << pairs.size() << mean_score(pairs, rule, inf);
    csv.end_row();
  }
}

inline void cmd_decompose(const DataOptions& dopt, const std::string& rule_text,
                          const BootstrapOptions& bopt, Context& ctx) {
  const ScoringRule rule = ScoringRule::parse(rule_text);
  const auto boot = bopt.config();
  const Dataset ds = open_dataset(dopt, ctx);
  CsvWriter csv(ctx.out_dir / "decompose.csv", {"system", "lead_day", "rule", "mean_score", "mcb",
                                                 "dsc", "unc", "mcb_lo", "mcb_hi", "dsc_lo", "dsc_hi"});
  std::map<std::string, PlotSeries> series;
  std::optional<double> unc;
  for (const auto& sp : select_pairs(ds, dopt)) {
    DiagramPoint p{sp.system, sp.lead_day, corp_decompose(sp.pairs, rule), std::nullopt, std::nullopt};
    if (boot) std::tie(p.ci_mcb, p.ci_dsc) = bootstrap_mcb_dsc(sp.pairs, rule, *boot);
    const auto& d = p.decomposition;
    csv << p.system << p.lead_day << rule.label() << d.mean_score << d.mcb << d.dsc << d.unc;
    auto opt = [](const std::optional<CiResult>& ci, bool lo) -> std::optional<double> {
      if (!ci) return std::nullopt;
      return lo ? ci->lo : ci->hi;
    };
    csv << opt(p.ci_mcb, true) << opt(p.ci_mcb, false) << opt(p.ci_dsc, true)
        << opt(p.ci_dsc, false);
    csv.end_row();
    auto& s = series[p.system];
    s.label = p.system;
    s.points.emplace_back(d.mcb, d.dsc);
    if (p.ci_mcb) s.error_bars.push_back({p.ci_mcb->lo, p.ci_mcb->hi, p.ci_dsc->lo, p.ci_dsc->hi});
    if (!unc) unc = d.unc;
  }
  PlotData plot{"Miscalibration-discrimination (" + rule.label() + ")", {}, {}, unc, {}};
  if (!ds.reference.empty()) {
    CsvWriter ref(ctx.out_dir / "decompose_reference.csv", {"lead_day", "rule", "mean_score"});
    for (const auto& [lead, field] : ds.reference) {
      if (dopt.lead_day && *dopt.lead_day != lead) continue;
      const PairSet pairs = flatten_pairs(field, ds.observation.at(lead));
      const double score = mean_score(pairs, rule);
      ref << lead << rule.label() << score;
      ref.end_row();
      plot.reference_scores.emplace_back("reference lead " + std::to_string(lead), score);
    }
  }
  if (ctx.svg) {
    for (auto& [name, s] : series) plot.series.push_back(s);
    write_text(ctx.out_dir / "mcb_dsc.svg", emit_svg(plot, PlotKind::mcb_dsc));
  }
  if (boot) ctx.extra["bootstrap"] = {{"resamples", boot->n_resamples}, {"seed", boot->seed},
                                      {"block", bopt.block}, {"level", boot->level}};
}

inline std::vector<std::pair<double, double>> murphy_polyline(const MurphyCurve& c) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : c.segments) {
    pts.emplace_back(s.lo, s.at(s.lo));
    pts.emplace_back(s.hi, s.at(s.hi));
  }
  return pts;
}

inline void cmd_murphy(const DataOptions& dopt, const std::vector<double>& grid,
                       const std::vector<std::string>& diff, double theta, Context& ctx) {
  const Dataset ds = open_dataset(dopt, ctx);
  if (!diff.empty()) {
    if (diff.size() != 2) throw ValidationError("--diff takes exactly two system names");
    CsvWriter csv(ctx.out_dir / "murphy_diff.csv", {"lead_day", "time_index", "diff"});
    const auto& a = ds.system(diff[0]);
    for (const auto& [lead, field] : a.by_lead) {
      if (dopt.lead_day && *dopt.lead_day != lead) continue;
      if (!ds.system(diff[1]).by_lead.contains(lead)) continue;
      const auto series =
          murphy_difference(ds.pairs(diff[0], lead), ds.pairs(diff[1], lead), theta);
      for (std::size_t i = 0; i < series.diff.size(); ++i) {
        csv << lead << series.time_index[i] << series.diff[i];
        csv.end_row();
      }
    }
    ctx.extra["diff"] = {{"a", diff[0]}, {"b", diff[1]}, {"theta", theta}};
    return;
  }
  CsvWriter csv(ctx.out_dir / "murphy.csv", {"system", "lead_day", "theta", "mean_score"});
  CsvWriter seg(ctx.out_dir / "murphy_segments.csv",
                {"system", "lead_day", "lo", "hi", "intercept", "slope"});
  CsvWriter sum(ctx.out_dir / "murphy_summary.csv",
                {"system", "lead_day", "integral", "mean_brier"});
  std::map<int, PlotData> plots;
  for (const auto& sp : select_pairs(ds, dopt)) {
    const MurphyCurve c = murphy_curve(sp.pairs, grid);
    for (double t : grid) {
      csv << sp.system << sp.lead_day << t << c.at(t);
      csv.end_row();
    }
    for (const auto& s : c.segments) {
      seg << sp.system << sp.lead_day << s.lo << s.hi << s.intercept << s.slope;
      seg.end_row();
    }
    sum << sp.system << sp.lead_day << c.integral() << mean_score(sp.pairs, ScoringRule::brier());
    sum.end_row();
    auto& plot = plots[sp.lead_day];
    plot.title = "Murphy diagram, lead day " + std::to_string(sp.lead_day);
    plot.series.push_back({sp.system, murphy_polyline(c), false, {}});
  }
  if (ctx.svg) {
    for (const auto& [lead, plot] : plots) {
      write_text(ctx.out_dir / ("murphy_lead" + std::to_string(lead) + ".svg"),
                 emit_svg(plot, PlotKind::murphy));
    }
  }
}

inline void cmd_reliability(const DataOptions& dopt, const BootstrapOptions& bopt, Context& ctx) {
  const auto boot = bopt.config();
  const Dataset ds = open_dataset(dopt, ctx);
  CsvWriter pts(ctx.out_dir / "reliability.csv",
                {"system", "lead_day", "forecast_lo", "forecast_hi", "recalibrated", "count"});
  CsvWriter hist(ctx.out_dir / "reliability_histogram.csv",
                 {"system", "lead_day", "bin_lo", "bin_hi", "count"});
  std::optional<CsvWriter> band;
  if (boot) {
    band.emplace(ctx.out_dir / "reliability_band.csv",
                 std::initializer_list<std::string_view>{"system", "lead_day", "forecast", "lo", "hi"});
  }
  for (const auto& sp : select_pairs(ds, dopt)) {
    const auto curve = reliability_curve(sp.pairs, boot);
    PlotSeries s{sp.system, {}, true, {}};
    for (const auto& p : curve.points) {
      pts << sp.system << sp.lead_day << p.forecast_lo << p.forecast_hi << p.recalibrated << p.count;
      pts.end_row();
      s.points.emplace_back(p.forecast_lo, p.recalibrated);
      if (p.forecast_hi != p.forecast_lo) s.points.emplace_back(p.forecast_hi, p.recalibrated);
    }
    for (std::size_t b = 0; b < curve.histogram.size(); ++b) {
      hist << sp.system << sp.lead_day << b / 10.0 << (b + 1) / 10.0 << curve.histogram[b];
      hist.end_row();
    }
    for (const auto& bp : curve.band) {
      *band << sp.system << sp.lead_day << bp.forecast << bp.lo << bp.hi;
      band->end_row();
    }
    if (ctx.svg) {
      s.markers = s.points.size() <= 2;
      PlotData plot{"CORP reliability: " + sp.system + ", lead day " + std::to_string(sp.lead_day),
                    {s}, {curve.histogram.begin(), curve.histogram.end()}, std::nullopt, {}};
      if (!curve.band.empty()) {
        PlotSeries lo{"95% band", {}, false, {}}, hi{"", {}, false, {}};
        for (const auto& bp : curve.band) {
          lo.points.emplace_back(bp.forecast, bp.lo);
          hi.points.emplace_back(bp.forecast, bp.hi);
        }
        plot.series.push_back(lo);
        plot.series.push_back(hi);
      }
      write_text(ctx.out_dir / ("reliability_" + slug(sp.system) + "_lead" +
                                std::to_string(sp.lead_day) + ".svg"),
                 emit_svg(plot, PlotKind::reliability));
    }
  }
}

inline void cmd_roc(const DataOptions& dopt, Context& ctx) {
  const Dataset ds = open_dataset(dopt, ctx);
  CsvWriter pts(ctx.out_dir / "roc.csv",
                {"system", "lead_day", "curve", "threshold", "false_alarm_rate", "hit_rate"});
  CsvWriter auc(ctx.out_dir / "roc_auc.csv", {"system", "lead_day", "curve", "auc"});
  std::map<int, PlotData> plots;
  for (const auto& sp : select_pairs(ds, dopt)) {
    for (bool concave : {false, true}) {
      const auto c = roc_curve(sp.pairs, concave);
      const char* kind = concave ? "concave" : "standard";
      PlotSeries s{sp.system + (concave ? " (concave)" : ""), {}, false, {}};
      for (const auto& p : c.points) {
        pts << sp.system << sp.lead_day << kind << p.threshold << p.false_alarm_rate << p.hit_rate;
        pts.end_row();
        s.points.emplace_back(p.false_alarm_rate, p.hit_rate);
      }
      auc << sp.system << sp.lead_day << kind << c.auc;
      auc.end_row();
      plots[sp.lead_day].title = "ROC, lead day " + std::to_string(sp.lead_day);
      plots[sp.lead_day].series.push_back(std::move(s));
    }
  }
  if (ctx.svg) {
    for (const auto& [lead, plot] : plots) {
      write_text(ctx.out_dir / ("roc_lead" + std::to_string(lead) + ".svg"),
                 emit_svg(plot, PlotKind::roc));
    }
  }
}

inline void cmd_pr(const DataOptions& dopt, Context& ctx) {
  const Dataset ds = open_dataset(dopt, ctx);
  CsvWriter pts(ctx.out_dir / "pr.csv", {"system", "lead_day", "threshold", "recall", "precision"});
  CsvWriter auc(ctx.out_dir / "pr_auc.csv", {"system", "lead_day", "auc_pr"});
  std::map<int, PlotData> plots;
  for (const auto& sp : select_pairs(ds, dopt)) {
    const auto c = pr_curve(sp.pairs);
    PlotSeries s{sp.system, {}, false, {}};
    for (const auto& p : c.points) {
      pts << sp.system << sp.lead_day << p.threshold << p.recall << p.precision;
      pts.end_row();
      s.points.emplace_back(p.recall, p.precision);
    }
    auc << sp.system << sp.lead_day << std::optional<double>(
        std::isnan(c.auc_pr) ? std::nullopt : std::optional<double>(c.auc_pr));
    auc.end_row();
    plots[sp.lead_day].title = "Precision-recall, lead day " + std::to_string(sp.lead_day);
    plots[sp.lead_day].series.push_back(std::move(s));
  }
  if (ctx.svg) {
    for (const auto& [lead, plot] : plots) {
      write_text(ctx.out_dir / ("pr_lead" + std::to_string(lead) + ".svg"),
                 emit_svg(plot, PlotKind::pr));
    }
  }
}

inline PlotSeries performance_series(const std::string& label, const PerformanceCurve& c) {
  PlotSeries s{label, {}, false, {}};
  for (const auto& p : c.points) s.points.emplace_back(*p.stats.sr, *p.stats.pod);
  return s;
}

inline void cmd_performance(const DataOptions& dopt, const std::vector<double>& thresholds,
                            Context& ctx) {
  const Dataset ds = open_dataset(dopt, ctx);
  CsvWriter pts(ctx.out_dir / "performance.csv",
                {"system", "lead_day", "theta", "hits", "misses", "false_alarms",
                 "correct_negatives", "pod", "sr", "csi", "fb"});
  CsvWriter sum(ctx.out_dir / "performance_summary.csv",
                {"system", "lead_day", "max_csi_grid", "argmax_theta_grid", "max_csi",
                 "argmax_theta", "skipped"});
  std::map<int, PlotData> plots;
  for (const auto& sp : select_pairs(ds, dopt)) {
    const auto c = performance_curve(sp.pairs, thresholds);
    for (const auto& p : c.points) {
      pts << sp.system << sp.lead_day << p.theta << p.counts.hits << p.counts.misses
          << p.counts.false_alarms << p.counts.correct_negatives << p.stats.pod << p.stats.sr
          << p.stats.csi << p.stats.fb;
      pts.end_row();
    }
    std::optional<MaxCsi> best;
    try {
      best = max_csi(sp.pairs);
    } catch (const UndefinedStatisticError&) {
    }
    sum << sp.system << sp.lead_day << c.max_csi << c.argmax_theta
        << (best ? std::optional<double>(best->csi) : std::nullopt)
        << (best ? std::optional<double>(best->theta) : std::nullopt) << c.skipped.size();
    sum.end_row();
    plots[sp.lead_day].title = "Performance diagram, lead day " + std::to_string(sp.lead_day);
    plots[sp.lead_day].series.push_back(performance_series(sp.system, c));
  }
  if (ctx.svg) {
    for (const auto& [lead, plot] : plots) {
      write_text(ctx.out_dir / ("performance_lead" + std::to_string(lead) + ".svg"),
                 emit_svg(plot, PlotKind::performance));
    }
  }
}

// Per-time spatial means of score(A) - score(B) at matching positions.
inline DifferenceSeries score_difference(const PairSet& a, const PairSet& b,
                                         const ScoringRule& rule) {
  if (a.size() != b.size() || !a.has_positions() || !b.has_positions()) {
    throw AlignmentError("systems are not aligned on the same pairs");
  }
  std::map<std::int64_t, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.time_index()[i] != b.time_index()[i] || a.cell_index()[i] != b.cell_index()[i]) {
      throw AlignmentError("systems differ in pair positions");
    }
    auto& slot = acc[a.time_index()[i]];
    slot.first += rule(a.forecast(i), a.outcome(i)) - rule(b.forecast(i), b.outcome(i));
    slot.second += 1;
  }
  DifferenceSeries out;
  for (const auto& [t, s] : acc) {
    out.time_index.push_back(t);
    out.diff.push_back(s.first / static_cast<double>(s.second));
  }
  return out;
}

inline void cmd_firm(const DataOptions& dopt, const std::string& thresholds,
                     const std::string& weights, const std::string& compare, double level,
                     Context& ctx) {
  const auto th = parse_list(thresholds, "threshold");
  const auto w = weights.empty() ? std::vector<double>(th.size(), 1.0) : parse_list(weights, "weight");
  const FirmSpec spec(th, w);
  const ScoringRule rule(spec);
  const auto matrix = firm_matrix(spec);
  CsvWriter mcsv(ctx.out_dir / "firm_matrix.csv", {"category", "non_event", "event"});
  for (std::size_t c = 0; c < matrix.categories.size(); ++c) {
    mcsv << matrix.categories[c] << matrix.non_event[c] << matrix.event[c];
    mcsv.end_row();
  }
  const Dataset ds = open_dataset(dopt, ctx);
  const auto selected = select_pairs(ds, dopt);
  CsvWriter csv(ctx.out_dir / "firm.csv", {"system", "lead_day", "mean_firm"});
  for (const auto& sp : selected) {
    csv << sp.system << sp.lead_day << mean_score(sp.pairs, rule);
    csv.end_row();
  }
  if (compare.empty()) return;
  (void)ds.system(compare);
  CsvWriter cmp(ctx.out_dir / "firm_compare.csv",
                {"reference", "system", "lead_day", "mean_diff", "lo", "hi", "statistic"});
  for (const auto& sp : selected) {
    if (sp.system == compare) continue;
    if (!ds.system(compare).by_lead.contains(sp.lead_day)) continue;
    const auto series = score_difference(ds.pairs(compare, sp.lead_day), sp.pairs, rule);
    const auto dm = dm_test(series.diff, sp.lead_day, level);
    cmp << compare << sp.system << sp.lead_day << dm.mean_diff << dm.lo << dm.hi << dm.statistic;
    cmp.end_row();
  }
  ctx.extra["compare"] = compare;
}

inline void cmd_compare(const DataOptions& dopt, const std::string& a, const std::string& b,
                        const std::vector<double>& grid, const std::string& rule_text,
                        Context& ctx) {
  const Dataset ds = open_dataset(dopt, ctx);
  std::optional<int> lead = dopt.lead_day;
  if (!lead) {
    std::set<int> common;
    for (const auto& [l, f] : ds.system(a).by_lead) {
      if (ds.system(b).by_lead.contains(l)) common.insert(l);
    }
    if (common.size() != 1) throw ValidationError("systems share several lead days; pass --lead-day");
    lead = *common.begin();
  }
  const PairSet pa = ds.pairs(a, *lead);
  const PairSet pb = ds.pairs(b, *lead);
  CsvWriter csv(ctx.out_dir / "compare.csv",
                {"theta", "mean_diff", "stat", "lo50", "hi50", "lo95", "hi95"});
  for (double theta : grid) {
    const auto series = murphy_difference(pa, pb, theta);
    const auto dm = dm_test(series.diff, *lead, 0.95);
    const auto [lo50, hi50] = dm.interval(0.5);
    csv << theta << dm.mean_diff << dm.statistic << lo50 << hi50 << dm.lo << dm.hi;
    csv.end_row();
  }
  if (!rule_text.empty()) {
    const ScoringRule rule = ScoringRule::parse(rule_text);
    const auto dm = dm_test(score_difference(pa, pb, rule).diff, *lead, 0.95);
    const auto [lo50, hi50] = dm.interval(0.5);
    CsvWriter r(ctx.out_dir / "compare_rule.csv",
                {"rule", "mean_diff", "stat", "lo50", "hi50", "lo95", "hi95"});
    r << rule.label() << dm.mean_diff << dm.statistic << lo50 << hi50 << dm.lo << dm.hi;
    r.end_row();
  }
  ctx.extra["compare"] = {{"a", a}, {"b", b}, {"lead_day", *lead}};
}

inline void cmd_synthetic(const SyntheticConfig& cfg, double grid_step, std::size_t repeat,
                          Context& ctx) {
  const auto systems = make_systems(cfg);
  const auto result = run_experiment(cfg, systems);
  nlohmann::json report = result.to_json();
  if (repeat > 0) {
    const auto rep = run_repeated(cfg, repeat);
    nlohmann::json r = {{"repetitions", rep.repetitions}, {"systems", nlohmann::json::array()}};
    for (const auto& s : rep.systems) {
      auto m = [](const RepeatedSummary::Moments& v) {
        return nlohmann::json{{"mean", v.mean}, {"std_error", v.std_error}};
      };
      r["systems"].push_back({{"name", s.name}, {"max_csi", m(s.max_csi)}, {"auc_pr", m(s.auc_pr)},
                              {"mean_brier", m(s.mean_brier)}, {"auc_roc", m(s.auc_roc)}});
    }
    report["repeated"] = r;
  }
  write_text(ctx.out_dir / "synthetic.json", report.dump(2) + "\n");

  const auto thresholds = regular_grid(grid_step, true);
  const auto murphy_grid = regular_grid(grid_step / 2.0, false);
  CsvWriter perf(ctx.out_dir / "synthetic_performance.csv",
                 {"system", "theta", "pod", "sr", "csi", "fb"});
  CsvWriter rel(ctx.out_dir / "synthetic_reliability.csv",
                {"system", "forecast_lo", "forecast_hi", "recalibrated", "count"});
  CsvWriter mur(ctx.out_dir / "synthetic_murphy.csv", {"system", "theta", "mean_score"});
  CsvWriter roc(ctx.out_dir / "synthetic_roc.csv",
                {"system", "curve", "threshold", "false_alarm_rate", "hit_rate"});
  PlotData pplot{"Performance diagram (synthetic)", {}, {}, std::nullopt, {}};
  PlotData mplot{"Murphy diagram (synthetic)", {}, {}, std::nullopt, {}};
  PlotData rplot{"CORP reliability (synthetic)", {}, {}, std::nullopt, {}};
  PlotData oplot{"Concave ROC (synthetic)", {}, {}, std::nullopt, {}};
  const auto all = systems.all();
  for (std::size_t k = 0; k < all.size(); ++k) {
    const std::string name = SyntheticSystems::names[k];
    const PairSet& pairs = *all[k];
    const auto pc = performance_curve(pairs, thresholds);
    for (const auto& p : pc.points) {
      perf << name << p.theta << p.stats.pod << p.stats.sr << p.stats.csi << p.stats.fb;
      perf.end_row();
    }
    pplot.series.push_back(performance_series(name, pc));

    const auto rc = reliability_curve(pairs);
    PlotSeries rs{name, {}, false, {}};
    for (const auto& p : rc.points) {
      rel << name << p.forecast_lo << p.forecast_hi << p.recalibrated << p.count;
      rel.end_row();
      rs.points.emplace_back((p.forecast_lo + p.forecast_hi) / 2.0, p.recalibrated);
    }
    rplot.series.push_back(std::move(rs));

    const auto mc = murphy_curve(pairs);
    PlotSeries ms{name, {}, false, {}};
    for (double t : murphy_grid) {
      mur << name << t << mc.at(t);
      mur.end_row();
      ms.points.emplace_back(t, mc.at(t));
    }
    mplot.series.push_back(std::move(ms));

    // Standard curve on the display grid, concave curve in full.
    const SortedForecasts sf(pairs);
    for (double t : thresholds) {
      const auto c = sf.at(t);
      roc << name << "standard" << t
          << static_cast<double>(c.false_alarms) / static_cast<double>(sf.non_events())
          << static_cast<double>(c.hits) / static_cast<double>(sf.events());
      roc.end_row();
    }
    const auto cc = roc_curve(pairs, true);
    PlotSeries os{name, {}, false, {}};
    for (const auto& p : cc.points) {
      roc << name << "concave" << p.threshold << p.false_alarm_rate << p.hit_rate;
      roc.end_row();
      os.points.emplace_back(p.false_alarm_rate, p.hit_rate);
    }
    oplot.series.push_back(std::move(os));
  }
  if (ctx.svg) {
    write_text(ctx.out_dir / "synthetic_performance.svg", emit_svg(pplot, PlotKind::performance));
    write_text(ctx.out_dir / "synthetic_murphy.svg", emit_svg(mplot, PlotKind::murphy));
    write_text(ctx.out_dir / "synthetic_reliability.svg", emit_svg(rplot, PlotKind::reliability));
    write_text(ctx.out_dir / "synthetic_roc.svg", emit_svg(oplot, PlotKind::roc));
  }
  ctx.extra["seed"] = cfg.seed;
  ctx.extra["config"] = cfg.to_json();
}

// ---------------------------------------------------------------------------

inline void write_provenance(const Context& ctx, const std::string& subcommand,
                             const std::vector<std::string>& args) {
  nlohmann::json j;
  j["tool"] = "fcverify";
  j["version"] = kVersion;
  j["subcommand"] = subcommand;
  j["arguments"] = args;
  j["inputs"] = nlohmann::json::array();
  for (const auto& p : ctx.inputs) {
    j["inputs"].push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
  }
  for (const auto& [k, v] : ctx.extra.items()) j[k] = v;
  write_text(ctx.out_dir / "run.json", j.dump(2) + "\n");
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Verification of probability forecasts for binary outcomes", "fcverify"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  std::string out_dir = ".";
  bool svg = false;
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_flag("--svg", svg, "Also write SVG renderings");

  DataOptions dopt;
  BootstrapOptions bopt;
  std::string rule_text = R"({"rule":"brier"})";
  bool allow_inf = false;

  auto* score = app.add_subcommand("score", "Mean score per system and lead day");
  dopt.add_to(score);
  score->add_option("--rule", rule_text, "Scoring rule as JSON");
  score->add_flag("--allow-infinite", allow_inf, "Let infinite log scores propagate");

  auto* decompose = app.add_subcommand("decompose", "CORP decomposition (MCB, DSC, UNC)");
  DataOptions dopt_dec;
  dopt_dec.add_to(decompose);
  decompose->add_option("--rule", rule_text, "Scoring rule as JSON");
  bopt.add_to(decompose);

  auto* murphy = app.add_subcommand("murphy", "Murphy curves or per-time Murphy differences");
  DataOptions dopt_mur;
  dopt_mur.add_to(murphy);
  double grid_step = 0.01;
  std::string thresholds_text;
  std::vector<std::string> diff;
  double theta = 0.5;
  murphy->add_option("--grid-step", grid_step, "Display grid spacing");
  murphy->add_option("--thresholds", thresholds_text, "Comma-separated display thresholds");
  murphy->add_option("--diff", diff, "Two systems A B: per-time mean S_theta(A) - S_theta(B)")
      ->expected(2);
  murphy->add_option("--theta", theta, "Decision threshold for --diff");

  auto* reliability = app.add_subcommand("reliability", "CORP reliability curves");
  DataOptions dopt_rel;
  dopt_rel.add_to(reliability);
  BootstrapOptions bopt_rel;
  bopt_rel.add_to(reliability);

  auto* roc = app.add_subcommand("roc", "Standard and concave ROC curves");
  DataOptions dopt_roc;
  dopt_roc.add_to(roc);

  auto* pr = app.add_subcommand("pr", "Precision-recall curves and AUCPR");
  DataOptions dopt_pr;
  dopt_pr.add_to(pr);

  auto* perf = app.add_subcommand("performance", "Performance-diagram statistics");
  DataOptions dopt_perf;
  dopt_perf.add_to(perf);
  std::string perf_thresholds;
  perf->add_option("--thresholds", perf_thresholds, "Comma-separated threshold probabilities");
  perf->add_option("--grid-step", grid_step, "Threshold grid spacing when --thresholds is absent");

  auto* firm = app.add_subcommand("firm", "FIRM scores, scoring matrix and comparisons");
  DataOptions dopt_firm;
  dopt_firm.add_to(firm);
  std::string firm_thresholds, firm_weights, firm_compare;
  double level = 0.95;
  firm->add_option("--thresholds", firm_thresholds, "Comma-separated decision thresholds")
      ->required();
  firm->add_option("--weights", firm_weights, "Comma-separated weights (default all 1)");
  firm->add_option("--compare", firm_compare, "System whose FIRM score is compared to the others");
  firm->add_option("--level", level, "Confidence level for comparisons");

  auto* compare = app.add_subcommand("compare", "Murphy-difference bands via Diebold-Mariano");
  DataOptions dopt_cmp;
  dopt_cmp.add_to(compare);
  std::string sys_a, sys_b, compare_rule;
  compare->add_option("--a", sys_a, "First system")->required();
  compare->add_option("--b", sys_b, "Second system")->required();
  compare->add_option("--grid-step", grid_step, "Decision-threshold grid spacing");
  compare->add_option("--thresholds", thresholds_text, "Comma-separated decision thresholds");
  compare->add_option("--rule", compare_rule, "Also compare mean scores under this rule (JSON)");

  auto* synthetic = app.add_subcommand("synthetic", "Synthetic Ideal/Under/Over/Jitter experiment");
  SyntheticConfig scfg;
  std::string beta = "1,3", support = "0,0.5";
  std::size_t repeat = 0;
  synthetic->add_option("--n", scfg.n_trials, "Number of trials")->capture_default_str();
  synthetic->add_option("--seed", scfg.seed, "Seed")->capture_default_str();
  synthetic->add_option("--beta", beta, "Beta shape parameters a,b");
  synthetic->add_option("--support", support, "Support lo,hi");
  synthetic->add_option("--jitter-sd", scfg.jitter_sd, "Jitter noise standard deviation");
  synthetic->add_option("--grid-step", grid_step, "Display grid spacing for curve CSVs");
  synthetic->add_option("--repeat", repeat, "Also run this many repeated experiments");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    Context ctx;
    ctx.out_dir = out_dir;
    ctx.svg = svg;
    std::filesystem::create_directories(ctx.out_dir);
    auto grid_from = [&](const std::string& text, bool include_one) {
      return text.empty() ? regular_grid(grid_step, include_one) : parse_list(text, "threshold");
    };
    std::string name;
    if (*score) {
      name = "score";
      cmd_score(dopt, rule_text, allow_inf, ctx);
    } else if (*decompose) {
      name = "decompose";
      cmd_decompose(dopt_dec, rule_text, bopt, ctx);
    } else if (*murphy) {
      name = "murphy";
      cmd_murphy(dopt_mur, grid_from(thresholds_text, false), diff, theta, ctx);
    } else if (*reliability) {
      name = "reliability";
      cmd_reliability(dopt_rel, bopt_rel, ctx);
    } else if (*roc) {
      name = "roc";
      cmd_roc(dopt_roc, ctx);
    } else if (*pr) {
      name = "pr";
      cmd_pr(dopt_pr, ctx);
    } else if (*perf) {
      name = "performance";
      cmd_performance(dopt_perf, grid_from(perf_thresholds, true), ctx);
    } else if (*firm) {
      name = "firm";
      cmd_firm(dopt_firm, firm_thresholds, firm_weights, firm_compare, level, ctx);
    } else if (*compare) {
      name = "compare";
      cmd_compare(dopt_cmp, sys_a, sys_b, grid_from(thresholds_text, false), compare_rule, ctx);
    } else if (*synthetic) {
      name = "synthetic";
      const auto ab = parse_list(beta, "beta");
      const auto lohi = parse_list(support, "support");
      if (ab.size() != 2 || lohi.size() != 2) {
        throw ValidationError("--beta and --support take two comma-separated values");
      }
      scfg.beta_a = ab[0];
      scfg.beta_b = ab[1];
      scfg.support_lo = lohi[0];
      scfg.support_hi = lohi[1];
      scfg.validate();
      cmd_synthetic(scfg, grid_step, repeat, ctx);
    }
    write_provenance(ctx, name, args);
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace fcv::cli
