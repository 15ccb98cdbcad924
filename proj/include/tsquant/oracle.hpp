#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tsquant/error.hpp"
#include "tsquant/metrics.hpp"
#include "tsquant/numeric.hpp"
#include "tsquant/quantizer.hpp"
#include "tsquant/scaling.hpp"
#include "tsquant/series.hpp"

namespace tsquant {

/// Layout midpoint that sits on the bulk of the scaled data: 0.5 for min-max
/// (scaled context in [0, 1]), 0 otherwise.
inline double default_center_offset(ScalingScheme scaling) noexcept {
  return scaling == ScalingScheme::minmax ? 0.5 : 0.0;
}

/// One cell of the scaling x binning grid at one vocabulary size and width.
struct TokenizerConfig {
  ScalingScheme scaling = ScalingScheme::mean;
  BinningScheme binning = BinningScheme::uniform;
  std::size_t vocab_size = 4096;
  double width = 10.0;
  double center_offset = 0.0;

  static TokenizerConfig make(ScalingScheme scaling, BinningScheme binning, std::size_t vocab_size, double width) {
    return TokenizerConfig{scaling, binning, vocab_size, width, default_center_offset(scaling)};
  }

  void validate() const {
    if (vocab_size < 2) throw ConfigError("vocabulary size must be at least 2");
    if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("width must be positive and finite");
    if (!std::isfinite(center_offset)) throw ConfigError("center offset must be finite");
  }

  BinLayout layout() const {
    validate();
    return BinLayout::build(binning, vocab_size, width, center_offset);
  }

  /// e.g. "normal_uniform_512"
  std::string key() const {
    return std::string(to_string(scaling)) + "_" + to_string(binning) + "_" + std::to_string(vocab_size);
  }
};

/// A window passed through scale -> quantize (context and horizon share the
/// context-fitted scaler).
struct TokenizedWindow {
  AffineScaler scaler;
  TokenSequence context;
  TokenSequence horizon;
};

inline TokenizedWindow tokenize_window(const BinLayout& layout, ScalingScheme scaling, const TimeSeriesWindow& w) {
  const auto scaler = AffineScaler::fit(scaling, w.context);
  return TokenizedWindow{scaler, quantize(layout, scaler.apply(w.context)), quantize(layout, scaler.apply(w.horizon))};
}

/// Perfect-predictor reconstruction: every value is replaced by the center of
/// the bin it falls in, mapped back to raw units.
inline std::vector<double> oracle_reconstruct(const BinLayout& layout, const AffineScaler& scaler,
                                              std::span<const double> values) {
  const auto tokens = quantize(layout, scaler.apply(values));
  return scaler.invert(dequantize(layout, tokens.tokens));
}

struct OracleResult {
  TokenizerConfig config;
  double mean_mase = 0.0;
  double median_mase = 0.0;
  std::size_t n_windows_scored = 0;
  std::size_t n_windows_skipped = 0;  // zero seasonal error
  double clip_fraction = 0.0;
};

/// Lower bound on the MASE of any forecaster that emits tokens of `config`:
/// each horizon is replaced by its own quantize/dequantize reconstruction.
/// Per-window work runs on `threads` workers (0 = TSQUANT_THREADS); the
/// aggregation is order-fixed so results do not depend on the thread count.
inline OracleResult oracle_evaluate(const TokenizerConfig& config, const Dataset& dataset, std::size_t threads = 0) {
  if (dataset.windows.empty()) throw InputError("oracle_evaluate: empty dataset");
  const BinLayout layout = config.layout();

  struct WindowScore {
    double mase = 0.0;
    bool scored = false;
    std::size_t clipped = 0;
  };
  std::vector<WindowScore> scores(dataset.windows.size());

  parallel_for(dataset.windows.size(), threads, [&](std::size_t i) {
    const auto& w = dataset.windows[i];
    const auto scaler = AffineScaler::fit(config.scaling, w.context);
    const auto tokens = quantize(layout, scaler.apply(w.horizon));
    scores[i].clipped = tokens.clipped_low + tokens.clipped_high;
    if (!(seasonal_error(w.context, w.seasonality) > 0.0)) return;
    const auto reconstruction = scaler.invert(dequantize(layout, tokens.tokens));
    scores[i].mase = mase(w.horizon, reconstruction, w.context, w.seasonality);
    scores[i].scored = true;
  });

  OracleResult result;
  result.config = config;
  std::vector<double> scored;
  scored.reserve(scores.size());
  std::size_t clipped = 0;
  std::size_t horizon_points = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    clipped += scores[i].clipped;
    horizon_points += dataset.windows[i].horizon.size();
    if (scores[i].scored) {
      scored.push_back(scores[i].mase);
    } else {
      ++result.n_windows_skipped;
    }
  }
  if (scored.empty()) throw InputError("oracle_evaluate: every window has zero seasonal error");
  result.n_windows_scored = scored.size();
  result.mean_mase = mean_of(scored);
  result.median_mase = median_of(std::move(scored));
  result.clip_fraction = static_cast<double>(clipped) / static_cast<double>(horizon_points);
  return result;
}

// ---------------------------------------------------------------------------
// Width tuning

struct WidthSearchSpec {
  double w_lo = 0.05;
  double w_hi = 200.0;
  std::size_t grid_points = 25;
  std::size_t budget = 60;
  double rel_tol = 1e-2;

  void validate() const {
    if (!(w_lo > 0.0) || !std::isfinite(w_hi) || !(w_hi > w_lo)) {
      throw ConfigError("width search range must satisfy 0 < w_lo < w_hi");
    }
    if (grid_points < 2) throw ConfigError("width search needs at least 2 grid points");
    if (budget < grid_points) throw ConfigError("width search budget is smaller than the grid");
    if (!(rel_tol > 0.0)) throw ConfigError("width search tolerance must be positive");
  }
};

struct WidthTrialPoint {
  double width = 0.0;
  double mean_mase = 0.0;
};

struct TuneResult {
  double width = 0.0;
  OracleResult result;
  std::vector<WidthTrialPoint> trace;  // evaluation order
};

/// Minimizes oracle mean MASE over the layout width: a log-spaced grid over
/// [w_lo, w_hi], then golden-section search in log-width inside the cell
/// around the best grid point, until the bracket's relative width drops below
/// rel_tol or the evaluation budget runs out. Ties go to the smaller width.
inline TuneResult tune_width(ScalingScheme scaling, BinningScheme binning, std::size_t vocab_size,
                             const Dataset& dataset, const WidthSearchSpec& search = {}, std::size_t threads = 0) {
  search.validate();
  TokenizerConfig base = TokenizerConfig::make(scaling, binning, vocab_size, search.w_lo);
  base.validate();

  std::vector<OracleResult> results;
  TuneResult out;
  auto evaluate = [&](double width) {
    TokenizerConfig cfg = base;
    cfg.width = width;
    results.push_back(oracle_evaluate(cfg, dataset, threads));
    out.trace.push_back({width, results.back().mean_mase});
    return results.back().mean_mase;
  };

  const double log_lo = std::log(search.w_lo);
  const double log_hi = std::log(search.w_hi);
  const std::size_t n = search.grid_points;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  grid.front() = search.w_lo;
  grid.back() = search.w_hi;

  std::size_t best = 0;
  double best_value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = evaluate(grid[i]);
    if (i == 0 || v < best_value) {
      best = i;
      best_value = v;
    }
  }

  double a = std::log(grid[best == 0 ? 0 : best - 1]);
  double b = std::log(grid[std::min(best + 1, n - 1)]);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto narrow_enough = [&] { return std::exp(b - a) - 1.0 < search.rel_tol; };
  auto budget_left = [&] { return out.trace.size() < search.budget; };

  if (!narrow_enough() && out.trace.size() + 2 <= search.budget) {
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = evaluate(std::exp(x1));
    double f2 = evaluate(std::exp(x2));
    while (!narrow_enough() && budget_left()) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = evaluate(std::exp(x1));
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = evaluate(std::exp(x2));
      }
    }
  }

  std::size_t arg = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const auto& cand = out.trace[i];
    const auto& cur = out.trace[arg];
    if (cand.mean_mase < cur.mean_mase || (cand.mean_mase == cur.mean_mase && cand.width < cur.width)) arg = i;
  }
  out.width = out.trace[arg].width;
  out.result = results[arg];
  return out;
}

}  // namespace tsquant
