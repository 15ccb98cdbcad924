// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Runs against the reference synthetic dataset (200 gaussian_ar1
// series, length 256, context 192, horizon 64, seed 42).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "tsquant/tsquant.hpp"

using namespace tsquant;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << id << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Standout {
  ScalingScheme scaling;
  BinningScheme binning;
};

constexpr Standout standouts[] = {{ScalingScheme::mean, BinningScheme::uniform},
                                  {ScalingScheme::mean, BinningScheme::normal},
                                  {ScalingScheme::normal, BinningScheme::uniform}};
constexpr std::size_t vocab_grid[] = {256, 512, 1024, 2048, 4096};

// Criteria 1-3 and 10 share one tuned grid over the standout configs.
struct Grid {
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> curves;  // label -> (B, mean_mase)
  SweepReport report;                                                        // entries for B in {512,1024,4096}
  TuneResult normal_uniform_512;
};

Grid run_grid(const Dataset& ds) {
  Grid g;
  for (const auto& s : standouts) {
    const std::string label = std::string(to_string(s.scaling)) + "_" + to_string(s.binning);
    for (std::size_t b : vocab_grid) {
      auto tuned = tune_width(s.scaling, s.binning, b, ds);
      g.curves[label].emplace_back(b, tuned.result.mean_mase);
      if (b == 512 || b == 1024 || b == 4096) {
        SweepEntry e;
        e.config = tuned.result.config;
        e.oracle = tuned.result;
        e.utilization = dataset_utilization(e.config, ds);
        e.search_trace = tuned.trace;
        g.report.entries.push_back(std::move(e));
      }
      if (s.scaling == ScalingScheme::normal && s.binning == BinningScheme::uniform && b == 512) {
        g.normal_uniform_512 = std::move(tuned);
      }
    }
  }
  return g;
}

void criteria_1_2(const Grid& g) {
  std::vector<LabeledFit> fits;
  bool all_fit = true;
  std::ostringstream detail;
  for (const auto& [label, pts] : g.curves) {
    const auto fit = fit_powerlaw(pts);
    fits.push_back({label, fit});
    all_fit = all_fit && fit.r_squared >= 0.98;
    detail << label << " slope=" << fmt(fit.slope, 4) << " r2=" << fmt(fit.r_squared, 6) << "; ";
  }
  report(1, all_fit, "power law r^2 >= 0.98: " + detail.str());
  const auto cmp = slope_equality(fits, 0.15);
  report(2, cmp.equal, "max pairwise slope delta " + fmt(cmp.max_delta, 4) + " <= 0.15");
}

void criterion_3(const Grid& g) {
  const auto rows = correlation_table(g.report);
  std::map<std::size_t, bool> perfect;
  std::map<std::size_t, double> best_abs;
  std::ostringstream detail;
  for (const auto& r : rows) {
    const double rho = r.row.rho.value_or(std::numeric_limits<double>::quiet_NaN());
    const double p = r.row.p_value.value_or(std::numeric_limits<double>::quiet_NaN());
    detail << r.row.label << " rho=" << fmt(rho, 4) << " p=" << fmt(p, 4) << "; ";
    const bool unit = r.row.defined() && std::abs(rho) == 1.0 && p == 0.0;
    perfect[r.vocab_size] = perfect[r.vocab_size] || unit;
    if (r.row.defined()) best_abs[r.vocab_size] = std::max(best_abs[r.vocab_size], std::abs(rho));
  }
  bool all_perfect = perfect.size() == 3;
  bool fallback = best_abs.size() == 3;
  for (const auto& [b, ok] : perfect) all_perfect = all_perfect && ok;
  for (const auto& [b, v] : best_abs) fallback = fallback && v >= 0.5;
  std::cout << "      orientation: " << utilization_orientation_note << "\n";
  if (all_perfect) {
    report(3, true, "|rho| = 1, p = 0 at every vocab size: " + detail.str());
  } else {
    report(3, fallback, "perfect monotonicity not reached, asserting |rho| >= 0.5: " + detail.str());
  }
}

void criterion_4() {
  const std::vector<double> xs{1, 2, 3};
  const auto half = spearman(xs, std::vector<double>{1, 3, 2});
  const auto up = spearman(xs, std::vector<double>{2, 4, 8});
  const auto down = spearman(xs, std::vector<double>{8, 4, 2});
  const bool ok = std::abs(*half.rho - 0.5) < 1e-15 && std::abs(*half.p_value - 0.667) <= 1e-3 && *up.rho == 1.0 &&
                  *up.p_value == 0.0 && *down.rho == -1.0 && *down.p_value == 0.0;
  report(4, ok, "rho=0.5 -> p=" + fmt(*half.p_value, 6) + "; rho=+-1 -> p=" + fmt(*up.p_value) + "," + fmt(*down.p_value));
}

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> bins_dist(2, 8), h_dist(1, 4);
  std::uniform_real_distribution<double> w_dist(0.25, 8.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  const ScalingScheme scalings[] = {ScalingScheme::mean, ScalingScheme::minmax, ScalingScheme::normal};
  const BinningScheme binnings[] = {BinningScheme::uniform, BinningScheme::normal, BinningScheme::expdecay};
  int beaten = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> context(16), horizon(h_dist(rng));
    const double level = 5.0 * n01(rng), spread = std::exp(n01(rng));
    for (auto& v : context) v = level + spread * n01(rng);
    for (auto& v : horizon) v = level + 1.5 * spread * n01(rng);
    const auto cfg = TokenizerConfig::make(scalings[trial % 3], binnings[(trial / 3) % 3], bins_dist(rng), w_dist(rng));
    const auto layout = cfg.layout();
    const auto scaler = AffineScaler::fit(cfg.scaling, context);
    const auto recon = oracle_reconstruct(layout, scaler, horizon);
    double total = 0.0;
    for (std::size_t i = 0; i < horizon.size(); ++i) total += std::abs(horizon[i] - recon[i]);
    const double best = reference::brute_force_min_total_error(layout.centers(), scaler.a(), scaler.b(), horizon);
    if (total > best * (1.0 + 1e-12) + 1e-12) ++beaten;
  }
  const double secs = seconds_since(t0);
  report(5, beaten == 0 && secs < 30.0,
         "50 windows, " + std::to_string(beaten) + " beaten by enumeration, " + fmt(secs, 3) + " s");
}

void criterion_6() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> bins_dist(2, 1024);
  std::uniform_real_distribution<double> width_dist(1e-2, 100.0), mu_dist(-10.0, 10.0), unit(0.0, 1.0);
  const BinningScheme schemes[] = {BinningScheme::uniform, BinningScheme::normal, BinningScheme::expdecay};
  std::size_t failed = 0, in_range = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto layout = build_layout(schemes[trial % 3], bins_dist(rng), width_dist(rng), mu_dist(rng));
    const auto& c = layout.centers();
    const double lo = c.front() - 0.25 * layout.width(), span = 1.5 * layout.width();
    const double x = lo + span * unit(rng), y = lo + span * unit(rng);
    const std::vector<double> xy{std::min(x, y), std::max(x, y)};
    const auto tokens = quantize(layout, xy).tokens;
    if (tokens[0] > tokens[1]) ++failed;                                   // monotone
    const auto back = dequantize(layout, tokens);
    if (quantize(layout, back).tokens != tokens) ++failed;                 // q(d(t)) = t
    for (std::size_t k = 0; k < 2; ++k) {
      if (xy[k] < c.front() || xy[k] > c.back()) continue;
      ++in_range;
      auto hi = std::upper_bound(c.begin(), c.end(), xy[k]);
      if (hi == c.end()) --hi;
      const double gap = *hi - *(hi - 1);
      if (std::abs(back[k] - xy[k]) > 0.5 * gap * (1.0 + 1e-12)) ++failed;  // half the containing gap
    }
  }
  report(6, failed == 0,
         "10000 random (layout, value) pairs, " + std::to_string(in_range) + " in-range checks, " +
             std::to_string(failed) + " failures");
}

void criterion_7() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> len_dist(2, 300);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::size_t failed = 0;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> ctx(len_dist(rng));
    const double level = 100.0 * n01(rng), spread = std::exp(3.0 * n01(rng));
    for (auto& v : ctx) v = level + spread * n01(rng);
    for (auto scheme : {ScalingScheme::mean, ScalingScheme::minmax, ScalingScheme::normal}) {
      const auto s = AffineScaler::fit(scheme, ctx);
      const auto z = s.apply(ctx);
      const double n = static_cast<double>(z.size());
      double mean = 0.0, mean_abs = 0.0;
      for (double v : z) {
        mean += v;
        mean_abs += std::abs(v);
      }
      mean /= n;
      mean_abs /= n;
      double var = 0.0;
      for (double v : z) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / n);
      bool ok = true;
      switch (scheme) {
        case ScalingScheme::normal:
          ok = std::abs(mean) <= 1e-9 && std::abs(sd - 1.0) <= 1e-9;
          break;
        case ScalingScheme::minmax: {
          const auto [mn, mx] = std::minmax_element(z.begin(), z.end());
          ok = std::abs(*mn) <= 1e-12 && std::abs(*mx - 1.0) <= 1e-12;
          break;
        }
        case ScalingScheme::mean:
          ok = std::abs(mean_abs - 1.0) <= 1e-9;
          break;
      }
      const auto back = s.invert(z);
      for (std::size_t i = 0; i < ctx.size() && ok; ++i) {
        const double tol = 8.0 * eps * (std::abs(ctx[i]) + std::abs(s.b()) / s.a());
        ok = std::abs(back[i] - ctx[i]) <= tol;
      }
      if (!ok) ++failed;
    }
  }
  report(7, failed == 0, "1000 contexts x 3 schemes, " + std::to_string(failed) + " contract violations");
}

void criterion_8() {
  using V = std::vector<double>;
  const bool fixtures = mase(V{3, 4}, V{3, 5}, V{1, 2, 3}, 1) == 0.5 && mase(V{3, 4}, V{3, 4}, V{1, 2, 3}, 1) == 0.0 &&
                        seasonal_error(V{0, 2, 4, 6}, 2) == 4.0 && mase(V{8}, V{4}, V{0, 2, 4, 6}, 2) == 1.0;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::lognormal_distribution<double> c_dist(0.0, 2.0);
  std::uniform_int_distribution<std::size_t> m_dist(1, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    V ctx(24), act(8), pred(8);
    for (auto& v : ctx) v = n01(rng);
    for (auto& v : act) v = n01(rng);
    for (auto& v : pred) v = n01(rng);
    const double c = c_dist(rng);
    const std::size_t m = m_dist(rng);
    auto scaled = [c](V v) {
      for (auto& x : v) x *= c;
      return v;
    };
    const double base = mase(act, pred, ctx, m);
    worst = std::max(worst, std::abs(mase(scaled(act), scaled(pred), scaled(ctx), m) - base) / base);
  }
  report(8, fixtures && worst <= 1e-12,
         std::string("fixtures ") + (fixtures ? "exact" : "MISMATCH") + "; worst relative scale drift " + fmt(worst, 3));
}

void criterion_9() {
  const auto flat = utilization_from_counts({7, 7, 7, 7, 7});
  const auto spike = utilization_from_counts({0, 0, 13, 0});
  const auto pair = utilization_from_counts({3, 1});
  report(9, flat.cramers_v == 0.0 && spike.cramers_v == 1.0 && pair.cramers_v == 0.5,
         "V(uniform)=" + fmt(flat.cramers_v) + " V(single bin)=" + fmt(spike.cramers_v) + " V([3,1])=" +
             fmt(pair.cramers_v));
}

void criterion_10(const Dataset& ds, const Grid& g) {
  const auto& tuned = g.normal_uniform_512;
  auto at = [&](double w) {
    return oracle_evaluate(TokenizerConfig::make(ScalingScheme::normal, BinningScheme::uniform, 512, w), ds).mean_mase;
  };
  const double m = tuned.result.mean_mase, half = at(0.5 * tuned.width), twice = at(2.0 * tuned.width);
  report(10, m <= half && m <= twice,
         "W=" + fmt(tuned.width, 5) + " mase=" + fmt(m) + " vs 0.5W " + fmt(half) + ", 2W " + fmt(twice) + " (" +
             std::to_string(tuned.trace.size()) + " trace points)");
}

// --- criterion 11 ---------------------------------------------------------

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tsquant");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void run_all_commands(const fs::path& dir) {
  const auto p = [&](const char* name) { return (dir / name).string(); };
  const std::vector<std::string> win{"--context", "96", "--horizon", "32"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  int bad = 0;
  bad += cli({"synth", "--kind", "heavy_tailed", "--n", "16", "--length", "128", "--seed", "42", "--output", p("data.csv")}) != 0;
  bad += cli(with({"tokenize", "--input", p("data.csv"), "--vocab", "256", "--output", p("tok.jsonl"), "--layout-out",
                   p("layout.json")},
                  win)) != 0;
  bad += cli({"detokenize", "--input", p("tok.jsonl"), "--layout", p("layout.json"), "--output", p("detok.jsonl")}) != 0;
  bad += cli(with({"bound", "--input", p("data.csv"), "--tune", "--vocab", "256", "--output", p("bound.json"), "--trace",
                   p("bound_trace.csv")},
                  win)) != 0;
  bad += cli(with({"tune", "--input", p("data.csv"), "--binning", "expdecay", "--output", p("tune.json"), "--trace",
                   p("tune_trace.csv")},
                  win)) != 0;
  bad += cli(with({"utilization", "--input", p("data.csv"), "--output", p("util.json"), "--histogram", p("hist.csv")},
                  win)) != 0;
  bad += cli(with({"sweep", "--input", p("data.csv"), "--vocab", "64,128,256", "--grid-points", "8", "--budget", "16",
                   "--output-dir", (dir / "sweep").string()},
                  win)) != 0;
  bad += cli({"correlate", "--report", (dir / "sweep" / "report.json").string(), "--output", p("corr.csv")}) != 0;
  if (bad) throw std::runtime_error(std::to_string(bad) + " CLI command(s) failed");
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

// Same flags and paths each time; only the thread cap changes.
void criterion_11() {
  const fs::path root = fs::temp_directory_path() / "tsquant_acceptance";
  std::map<std::string, std::map<std::string, std::string>> runs;
  try {
    for (const char* threads : {"1", "3", "1"}) {
      fs::remove_all(root);
      ::setenv("TSQUANT_THREADS", threads, 1);
      run_all_commands(root);
      ::unsetenv("TSQUANT_THREADS");
      const auto files = snapshot(root);
      auto [it, fresh] = runs.emplace(threads, files);
      if (!fresh && it->second != files) runs["1 (rerun)"] = files;
    }
    const auto& base = runs.at("1");
    std::size_t differing = 0;
    for (const auto& [label, files] : runs) {
      for (const auto& [name, contents] : base) {
        const auto it = files.find(name);
        if (it == files.end() || it->second != contents) {
          ++differing;
          std::cout << "      differs (" << label << "): " << name << "\n";
        }
      }
    }
    report(11, !base.empty() && runs.size() == 2 && differing == 0,
           "8 subcommands run with TSQUANT_THREADS=1, 3, 1; " + std::to_string(base.size()) +
               " files compared per run, " + std::to_string(differing) + " differ");
  } catch (const std::exception& e) {
    ::unsetenv("TSQUANT_THREADS");
    report(11, false, e.what());
  }
  fs::remove_all(root);
}

}  // namespace

int main() {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ds = generate_synthetic(SynthKind::gaussian_ar1, 200, 256, 42, {192, 64, 1});
    const auto grid = run_grid(ds);
    std::cout << "tuned grid: 3 configs x 5 vocab sizes on " << ds.windows.size() << " windows in "
              << fmt(seconds_since(t0), 3) << " s\n";
    criteria_1_2(grid);
    criterion_3(grid);
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10(ds, grid);
    criterion_11();
  } catch (const std::exception& e) {
    std::cout << "FAIL  acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
