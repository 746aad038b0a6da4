// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
//
//   acceptance [--scratch DIR] [--only N] [--regenerate-goldens]

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fcverify/cli.hpp"
#include "fcverify/fcverify.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fcv;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string fmt(double v, int digits = 5) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

fs::path g_scratch = fs::temp_directory_path() / "fcv_acceptance";
bool g_regenerate = false;

// ---------------------------------------------------------------------------
// Shared synthetic run at n = 10^6, seed 1.

struct BigRun {
  SyntheticSystems systems;
  ExperimentResult result;
  double seconds = 0.0;
};

const BigRun& big_run() {
  static const BigRun run = [] {
    SyntheticConfig cfg;
    cfg.n_trials = 1'000'000;
    cfg.seed = 1;
    const auto start = std::chrono::steady_clock::now();
    BigRun r{make_systems(cfg), {}, 0.0};
    r.result = run_experiment(cfg, r.systems);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }();
  return run;
}

Result table1() {
  const auto& run = big_run();
  const auto& res = run.result;
  bool ok = true;
  std::ostringstream d;
  auto check = [&](const std::string& what, double got, double want, double tol) {
    const bool good = std::abs(got - want) <= tol;
    ok &= good;
    d << what << "=" << fmt(got) << (good ? "" : "(!)") << " ";
  };
  const auto& ideal = res.system("Ideal");
  for (const char* name : {"Ideal", "Under", "Over"}) {
    const auto& s = res.system(name);
    check(std::string(name) + ".maxCSI", s.max_csi, 0.214, 0.005);
    check(std::string(name) + ".AUCPR", s.auc_pr, 0.275, 0.005);
    ok &= s.max_csi == ideal.max_csi && s.auc_pr == ideal.auc_pr;
  }
  check("Ideal.Brier", ideal.mean_brier, 0.100, 0.002);
  check("Under.Brier", res.system("Under").mean_brier, 0.106, 0.002);
  check("Over.Brier", res.system("Over").mean_brier, 0.125, 0.002);
  const auto& jit = res.system("Jitter");
  check("Jitter.maxCSI", jit.max_csi, 0.178, 0.005);
  check("Jitter.AUCPR", jit.auc_pr, 0.224, 0.005);
  check("Jitter.Brier", jit.mean_brier, 0.108, 0.002);
  d << "exact ties across Ideal/Under/Over: "
    << (res.system("Under").max_csi == ideal.max_csi && res.system("Over").auc_pr == ideal.auc_pr
            ? "yes"
            : "no")
    << "; runtime " << fmt(run.seconds, 1) << "s";
  ok &= run.seconds < 60.0;
  return {ok, d.str()};
}

Result analytic_brier() {
  const auto& sys = big_run().systems;
  const std::array<std::pair<const PairSet*, double>, 3> cases{
      {{&sys.ideal, 0.1}, {&sys.under, 0.10625}, {&sys.over, 0.125}}};
  const char* names[] = {"Ideal", "Under", "Over"};
  bool ok = true;
  std::ostringstream d;
  for (std::size_t k = 0; k < 3; ++k) {
    const PairSet& p = *cases[k].first;
    double s = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double b = brier(p.forecast(i), p.outcome(i));
      s += b;
      ss += b * b;
    }
    const double n = static_cast<double>(p.size());
    const double mean = s / n;
    const double se = std::sqrt((ss / n - mean * mean) / (n - 1.0));
    const double z = (mean - cases[k].second) / se;
    ok &= std::abs(z) <= 3.0;
    d << names[k] << " " << fmt(mean) << " vs " << cases[k].second << " (z=" << fmt(z, 2) << ") ";
  }
  return {ok, d.str()};
}

ScoringRule random_firm(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::uniform_real_distribution<double> w(0.1, 3.0);
  const int k = 1 + static_cast<int>(rng() % 4);
  std::vector<double> th;
  for (int i = 0; i < k; ++i) th.push_back(u(rng));
  std::sort(th.begin(), th.end());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  std::vector<double> ws;
  for (std::size_t i = 0; i < th.size(); ++i) ws.push_back(w(rng));
  return ScoringRule::firm(th, ws);
}

Result corp_identity() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  double worst_identity = 0.0;
  double min_mcb = 0.0;
  double min_dsc = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng() % 500;
    const PairSet p = oracle::random_pairs(rng, n, 1 + static_cast<int>(rng() % 100));
    ScoringRule rule = ScoringRule::brier();
    switch (rng() % 3) {
      case 1: rule = random_firm(rng); break;
      case 2: rule = ScoringRule::elementary(u(rng)); break;
      default: break;
    }
    const auto d = corp_decompose(p, rule);
    worst_identity = std::max(worst_identity, std::abs(d.mean_score - (d.mcb - d.dsc + d.unc)));
    min_mcb = std::min(min_mcb, d.mcb);
    min_dsc = std::min(min_dsc, d.dsc);
  }
  const bool ok = worst_identity <= 1e-12 && min_mcb >= -1e-12 && min_dsc >= -1e-12;
  std::ostringstream d;
  d << "max |S - (MCB - DSC + UNC)| = " << worst_identity << ", min MCB = " << min_mcb
    << ", min DSC = " << min_dsc;
  return {ok, d.str()};
}

Result murphy_integral() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const PairSet p = oracle::random_pairs(rng, 1 + rng() % 400, 1 + static_cast<int>(rng() % 200));
    worst = std::max(worst, std::abs(murphy_curve(p).integral() - oracle::mean_brier(p)));
  }
  return {worst <= 1e-10, "max |integral - mean Brier| = " + sci(worst)};
}

Result mixtures() {
  using boost::math::quadrature::gauss_kronrod;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  double worst = 0.0;
  double worst_quad = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    const int y = static_cast<int>(rng() % 2);
    worst = std::max(worst, std::abs(mixture_score(x, y, MixingMeasure::uniform) - brier(x, y)));
    worst = std::max(worst,
                     std::abs(mixture_score(x, y, MixingMeasure::log_measure) - log_score(x, y)));
    if (i < 100) {
      auto logm = [&](double t) { return elementary_score(t, x, y) / (2.0 * t * (1.0 - t)); };
      const double q = gauss_kronrod<double, 31>::integrate(logm, 0.0, x) +
                       gauss_kronrod<double, 31>::integrate(logm, x, 1.0);
      worst_quad = std::max(worst_quad, std::abs(q - log_score(x, y)));
    }
  }
  std::ostringstream d;
  d << "max closed-form error " << worst << "; quadrature of elementary scores vs log score "
    << worst_quad;
  return {worst <= 1e-12 && worst_quad <= 1e-8, d.str()};
}

Result pav_oracle() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (unsigned pattern = 0; pattern < 256; ++pattern) {
    std::vector<double> x(8);
    std::vector<std::uint8_t> y(8);
    for (std::size_t i = 0; i < 8; ++i) {
      x[i] = (static_cast<double>(i) + 0.05 + 0.9 * u(rng)) / 8.0;
      y[i] = (pattern >> i) & 1U;
    }
    std::shuffle(x.begin(), x.end(), rng);
    const PairSet p(x, y);
    const auto got = recalibrated_forecasts(p, pav_fit(p));
    const auto want = oracle::isotonic_brute_force(x, y);
    for (std::size_t i = 0; i < 8; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  return {worst <= 1e-10, "256 patterns, max |PAV - brute force| = " + sci(worst)};
}

Result appendix_d() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::size_t dominance = 0;
  std::size_t roc_only = 0;
  std::size_t counterexamples = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 49;
    std::vector<double> p(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      y[i] = u(rng) < p[i] ? 1 : 0;
    }
    std::vector<double> a(n);
    std::vector<double> b(n);
    const double noise = 0.3 * u(rng);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(p[i] + noise * g(rng), 0.0, 1.0);
    if (trial % 2 == 0) {
      // Coarsening of A: a garbling, so A should usually dominate.
      const double step = 0.1 + 0.4 * u(rng);
      for (std::size_t i = 0; i < n; ++i) b[i] = std::floor(a[i] / step) * step;
    } else {
      const double noise_b = 0.5 * u(rng);
      for (std::size_t i = 0; i < n; ++i) b[i] = std::clamp(p[i] + noise_b * g(rng), 0.0, 1.0);
    }
    const PairSet ra = recalibrate(PairSet(a, y));
    const PairSet rb = recalibrate(PairSet(b, y));
    const double br = base_rate(ra);
    if (br == 0.0 || br == 1.0) continue;

    std::vector<ScoringRule> rules{ScoringRule::brier()};
    for (int k = 0; k < 5; ++k) rules.push_back(random_firm(rng));
    const auto ma = murphy_curve(ra);
    const auto mb = murphy_curve(rb);
    const auto ca = roc_curve(ra, true);
    const auto cb = roc_curve(rb, true);
    for (int dir = 0; dir < 2; ++dir) {
      const auto& m1 = dir == 0 ? ma : mb;
      const auto& m2 = dir == 0 ? mb : ma;
      const auto& c1 = dir == 0 ? ca : cb;
      const auto& c2 = dir == 0 ? cb : ca;
      const PairSet& s1 = dir == 0 ? ra : rb;
      const PairSet& s2 = dir == 0 ? rb : ra;
      const bool murphy = murphy_dominates(m1, m2, 1e-12);
      const bool roc = roc_dominates(c1, c2, 1e-12);
      if (roc && !murphy) ++roc_only;
      if (!murphy) continue;
      ++dominance;
      bool good = roc_dominates(c1, c2, 1e-9);
      for (const auto& rule : rules) {
        good &= corp_decompose(s1, rule).dsc >= corp_decompose(s2, rule).dsc - 1e-9;
      }
      if (!good) ++counterexamples;
    }
  }
  std::ostringstream d;
  d << dominance << " Murphy-dominance cases, " << counterexamples
    << " counterexamples; concave-ROC dominance without Murphy dominance: " << roc_only;
  return {dominance > 0 && counterexamples == 0 && roc_only == 0, d.str()};
}

Result monotone_invariance() {
  SyntheticConfig cfg;
  cfg.n_trials = 100'000;
  cfg.seed = 8;
  const auto sys = make_systems(cfg);
  const auto ideal = system_stats("Ideal", sys.ideal);
  bool ok = true;
  for (const PairSet* s : {&sys.under, &sys.over}) {
    const auto st = system_stats("", *s);
    ok &= st.max_csi == ideal.max_csi && st.auc_pr == ideal.auc_pr && st.auc_roc == ideal.auc_roc;
  }
  const SortedForecasts si(sys.ideal);
  const SortedForecasts su(sys.under);
  const SortedForecasts so(sys.over);
  std::size_t checked = 0;
  std::vector<double> thetas;
  for (int i = 1; i <= 50; ++i) thetas.push_back(i / 100.0);
  for (std::size_t k = 0; k < sys.ideal.size(); k += 97) thetas.push_back(sys.ideal.forecast(k));
  for (double t : thetas) {
    if (!(t > 0.0 && t <= 0.5)) continue;
    const auto ci = si.at(t);
    ok &= ci == su.at(t / 2.0) && ci == so.at(2.0 * t);
    ++checked;
  }
  std::ostringstream d;
  d << "max CSI " << fmt(ideal.max_csi) << ", AUCPR " << fmt(ideal.auc_pr) << ", AUCROC "
    << fmt(ideal.auc_roc) << " identical; " << checked
    << " thresholds with identical contingency tables at theta, theta/2, 2 theta";
  return {ok, d.str()};
}

Result csi_hedging() {
  const auto ex = find_csi_hedging_example();
  if (!ex) return {false, "no example found"};
  // Independent enumeration of the next case's two outcomes.
  const double h = static_cast<double>(ex->history.hits);
  const double m = static_cast<double>(ex->history.misses);
  const double f = static_cast<double>(ex->history.false_alarms);
  auto csi = [](double hh, double mm, double ff) { return hh / (hh + mm + ff); };
  const double csi_now = csi(h, m, f);
  const double event = ex->p * csi(h + 1, m, f) + (1 - ex->p) * csi(h, m, f + 1);
  const double honest = ex->p * csi(h, m + 1, f) + (1 - ex->p) * csi(h, m, f);
  const double bound = csi_now / (csi_now + 1.0);
  const bool ok = ex->theta > ex->p && ex->p >= bound && event > honest &&
                  std::abs(event - ex->expected_if_event) < 1e-15 &&
                  std::abs(honest - ex->expected_if_honest) < 1e-15;
  std::ostringstream d;
  d << "history h=" << h << " m=" << m << " f=" << f << " (CSI " << fmt(csi_now, 4) << ", bound "
    << fmt(bound, 4) << "), theta=" << ex->theta << ", p=" << ex->p << ": E[CSI | event] "
    << fmt(event, 4) << " > E[CSI | honest] " << fmt(honest, 4);
  return {ok, d.str()};
}

Result brier_ranking() {
  int holds = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    SyntheticConfig cfg;
    cfg.n_trials = 100'000;
    cfg.seed = derive_seed(2024, 10, r);
    const auto sys = make_systems(cfg);
    const double bi = mean_score(sys.ideal, ScoringRule::brier());
    const double bu = mean_score(sys.under, ScoringRule::brier());
    const double bj = mean_score(sys.jitter, ScoringRule::brier());
    const double bo = mean_score(sys.over, ScoringRule::brier());
    if (bi < bu && bu < bj && bj < bo) ++holds;
  }
  return {holds >= 95, "Ideal < Under < Jitter < Over in " + std::to_string(holds) + "/100"};
}

Result inference_sanity() {
  const std::vector<double> zero(100, 0.0);
  const auto dm0 = dm_test(zero, 1);
  bool ok = dm0.statistic == 0.0 && dm0.lo == 0.0 && dm0.hi == 0.0;

  BootstrapConfig cfg;
  cfg.n_resamples = 200;
  cfg.seed = 3;
  const std::vector<double> field(10 * 4 * 5, 0.42);
  const auto ci = circular_block_bootstrap(
      field, Shape3{10, 4, 5},
      [](std::span<const double> v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      },
      cfg);
  ok &= ci.hi - ci.lo == 0.0;

  // AR(1), phi = 0.5, n = 1000, true mean 0.
  const double phi = 0.5;
  const std::size_t n = 1000;
  int covered = 0;
  for (std::uint64_t trial = 0; trial < 2000; ++trial) {
    Engine rng(derive_seed(77, 11, trial));
    std::vector<double> d(n);
    double prev = normal_quantile(uniform_open01(rng)) / std::sqrt(1.0 - phi * phi);
    for (std::size_t t = 0; t < n; ++t) {
      prev = t == 0 ? prev : phi * prev + normal_quantile(uniform_open01(rng));
      d[t] = prev;
    }
    const auto r = dm_test(d, 1, 0.95);
    if (r.lo <= 0.0 && 0.0 <= r.hi) ++covered;
  }
  const double coverage = covered / 2000.0;
  ok &= coverage >= 0.92 && coverage <= 0.98;
  std::ostringstream s;
  s << "DM(identical) stat " << dm0.statistic << "; constant-field CI width " << ci.hi - ci.lo
    << "; AR(1) phi=0.5 n=1000 coverage " << fmt(100 * coverage, 2) << "%";
  return {ok, s.str()};
}

// ---------------------------------------------------------------------------
// Golden-file regression of the CLI on the bundled miniature dataset.

struct GoldenCase {
  std::string name;
  std::vector<std::string> args;
};

std::vector<GoldenCase> golden_cases(const std::string& manifest) {
  return {
      {"score", {"score", "--manifest", manifest}},
      {"score_elementary",
       {"score", "--manifest", manifest, "--rule", R"({"rule":"elementary","theta":0.3})"}},
      {"decompose", {"decompose", "--manifest", manifest, "--bootstrap", "200", "--seed", "11"}},
      {"decompose_firm",
       {"decompose", "--manifest", manifest, "--missing", "per-lead-day", "--rule",
        R"({"rule":"firm","thresholds":[0.095,0.295],"weights":[1,1]})"}},
      {"murphy", {"murphy", "--manifest", manifest, "--grid-step", "0.05"}},
      {"murphy_diff", {"murphy", "--manifest", manifest, "--diff", "alpha", "beta", "--theta", "0.3"}},
      {"reliability", {"reliability", "--manifest", manifest, "--bootstrap", "100", "--seed", "5"}},
      {"roc", {"roc", "--manifest", manifest}},
      {"pr", {"pr", "--manifest", manifest, "--round-percent"}},
      {"performance", {"performance", "--manifest", manifest, "--grid-step", "0.05"}},
      {"firm",
       {"firm", "--manifest", manifest, "--thresholds", "0.095,0.295", "--weights", "1,1",
        "--compare", "alpha"}},
      {"compare",
       {"compare", "--manifest", manifest, "--a", "alpha", "--b", "beta", "--lead-day", "1",
        "--grid-step", "0.1", "--rule", R"({"rule":"brier"})"}},
      {"synthetic", {"synthetic", "--n", "5000", "--seed", "3", "--grid-step", "0.1"}},
  };
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compares two texts token by token: numbers within a relative tolerance,
// everything else exactly. Returns an empty string when they match.
std::string compare_texts(const std::string& a, const std::string& b) {
  static const std::regex number(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
  auto tokens = [](const std::string& s) {
    std::vector<std::pair<bool, std::string>> out;
    std::size_t pos = 0;
    for (std::sregex_iterator it(s.begin(), s.end(), number), end; it != end; ++it) {
      const auto at = static_cast<std::size_t>(it->position());
      if (at > pos) out.emplace_back(false, s.substr(pos, at - pos));
      out.emplace_back(true, it->str());
      pos = at + it->str().size();
    }
    if (pos < s.size()) out.emplace_back(false, s.substr(pos));
    return out;
  };
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  if (ta.size() != tb.size()) return "token count " + std::to_string(ta.size()) + " vs " + std::to_string(tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].first != tb[i].first) return "structure differs at token " + std::to_string(i);
    if (!ta[i].first) {
      if (ta[i].second != tb[i].second) return "text '" + ta[i].second + "' vs '" + tb[i].second + "'";
      continue;
    }
    const double x = std::stod(ta[i].second);
    const double y = std::stod(tb[i].second);
    if (std::abs(x - y) > 1e-9 * std::max({1.0, std::abs(x), std::abs(y)})) {
      return "value " + ta[i].second + " vs " + tb[i].second;
    }
  }
  return {};
}

int run_cli(std::vector<std::string> args, std::string& err) {
  args.insert(args.begin(), "fcverify");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream errs;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, errs);
  err = errs.str();
  return code;
}

Result golden_cli() {
  const fs::path data = FCV_TEST_DATA_DIR;
  const fs::path golden = FCV_GOLDEN_DIR;
  const std::string manifest = (data / "mini" / "manifest.json").string();
  std::size_t files = 0;
  std::vector<std::string> problems;
  for (const auto& c : golden_cases(manifest)) {
    const fs::path out = g_scratch / "golden" / c.name;
    fs::remove_all(out);
    std::vector<std::string> args{"--svg", "--out", out.string()};
    args.insert(args.end(), c.args.begin(), c.args.end());
    std::string err;
    if (const int code = run_cli(args, err); code != 0) {
      problems.push_back(c.name + ": exit " + std::to_string(code) + " " + err);
      continue;
    }
    const auto run = nlohmann::json::parse(slurp(out / "run.json"));
    if (run["subcommand"] != c.args.front()) problems.push_back(c.name + ": run.json subcommand");
    for (const auto& input : run["inputs"]) {
      if (input["sha256"].get<std::string>().size() != 64) problems.push_back(c.name + ": digest");
    }
    std::vector<fs::path> produced;
    for (const auto& e : fs::directory_iterator(out)) {
      const auto ext = e.path().extension();
      if (ext == ".svg") {
        if (slurp(e.path()).rfind("<svg", 0) != 0) problems.push_back(c.name + ": bad svg");
      } else if (e.path().filename() != "run.json") {
        produced.push_back(e.path());
      }
    }
    std::sort(produced.begin(), produced.end());
    const fs::path want_dir = golden / c.name;
    if (g_regenerate) {
      fs::remove_all(want_dir);
      fs::create_directories(want_dir);
      for (const auto& p : produced) fs::copy_file(p, want_dir / p.filename());
      files += produced.size();
      continue;
    }
    std::vector<fs::path> expected;
    if (fs::exists(want_dir)) {
      for (const auto& e : fs::directory_iterator(want_dir)) expected.push_back(e.path());
    }
    if (expected.size() != produced.size()) {
      problems.push_back(c.name + ": produced " + std::to_string(produced.size()) + " files, golden has " +
                         std::to_string(expected.size()));
      continue;
    }
    for (const auto& p : produced) {
      ++files;
      const fs::path want = want_dir / p.filename();
      if (!fs::exists(want)) {
        problems.push_back(c.name + "/" + p.filename().string() + ": no golden");
        continue;
      }
      if (auto diff = compare_texts(slurp(p), slurp(want)); !diff.empty()) {
        problems.push_back(c.name + "/" + p.filename().string() + ": " + diff);
      }
    }
  }
  std::ostringstream d;
  d << golden_cases(manifest).size() << " CLI runs, " << files << " output files "
    << (g_regenerate ? "written as goldens" : "compared to goldens");
  for (const auto& p : problems) d << "\n      " << p;
  return {problems.empty(), d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--scratch" && i + 1 < argc) {
      g_scratch = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else if (a == "--regenerate-goldens") {
      g_regenerate = true;
    } else {
      std::cerr << "usage: acceptance [--scratch DIR] [--only N] [--regenerate-goldens]\n";
      return 1;
    }
  }
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"Synthetic table at n=1e6, seed 1", table1},
      {"Analytic Brier expectations within 3 standard errors", analytic_brier},
      {"CORP identity and nonnegativity on 200 random instances", corp_identity},
      {"Murphy curve integral equals mean Brier on 100 instances", murphy_integral},
      {"Mixture closed forms on 1000 draws", mixtures},
      {"PAV equals brute-force isotonic fit on all 2^8 patterns", pav_oracle},
      {"Murphy dominance implies concave-ROC and DSC ordering (500 pairs)", appendix_d},
      {"Monotone-transform invariance of CSI, AUCPR, AUCROC", monotone_invariance},
      {"CSI hedging demonstration", csi_hedging},
      {"Brier ranking across 100 repetitions at n=1e5", brier_ranking},
      {"DM and bootstrap sanity, AR(1) coverage over 2000 trials", inference_sanity},
      {"CLI golden-file regression on the miniature gridded dataset", golden_cli},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && static_cast<int>(k + 1) != only) continue;
    Result r;
    try {
      r = criteria[k].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += r.pass ? 0 : 1;
    std::printf("[%s] criterion %2zu: %s\n      %s\n", r.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
