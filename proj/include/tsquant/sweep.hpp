#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsquant/error.hpp"
#include "tsquant/metrics.hpp"
#include "tsquant/numeric.hpp"
#include "tsquant/oracle.hpp"
#include "tsquant/version.hpp"

namespace tsquant {

// ---------------------------------------------------------------------------
// Power-law fit

struct PowerLawFit {
  double slope = 0.0;  // exponent of mase ~ B^slope
  double intercept = 0.0;
  double r_squared = 0.0;
  bool degenerate = false;  // zero variance in ln(mase); r_squared reported as 1
};

/// Ordinary least squares of ln(mase) on ln(B).
inline PowerLawFit fit_powerlaw(std::span<const std::pair<std::size_t, double>> points) {
  if (points.size() < 3) throw ConfigError("power-law fit needs at least 3 points");
  std::vector<std::size_t> sizes;
  for (const auto& [b, m] : points) {
    if (b < 1) throw ConfigError("power-law fit: vocabulary size must be positive");
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("power-law fit: mase must be positive and finite");
    sizes.push_back(b);
  }
  std::sort(sizes.begin(), sizes.end());
  if (std::adjacent_find(sizes.begin(), sizes.end()) != sizes.end()) {
    throw ConfigError("power-law fit: vocabulary sizes must be distinct");
  }

  const std::size_t n = points.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::log(static_cast<double>(points[i].first));
    ys[i] = std::log(points[i].second);
  }
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  std::vector<double> sxx(n), sxy(n), syy(n);
  for (std::size_t i = 0; i < n; ++i) {
    sxx[i] = (xs[i] - mx) * (xs[i] - mx);
    sxy[i] = (xs[i] - mx) * (ys[i] - my);
    syy[i] = (ys[i] - my) * (ys[i] - my);
  }
  PowerLawFit fit;
  const double vxx = compensated_sum(sxx);
  fit.slope = compensated_sum(sxy) / vxx;
  fit.intercept = my - fit.slope * mx;
  const double vyy = compensated_sum(syy);
  if (!(vyy > 0.0)) {
    fit.r_squared = 1.0;
    fit.degenerate = true;
    return fit;
  }
  std::vector<double> residuals(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    residuals[i] = r * r;
  }
  fit.r_squared = std::clamp(1.0 - compensated_sum(residuals) / vyy, 0.0, 1.0);
  return fit;
}

struct LabeledFit {
  std::string label;
  PowerLawFit fit;
};

struct SlopeDelta {
  std::string first;
  std::string second;
  double delta = 0.0;  // |slope_first - slope_second|
};

struct SlopeComparison {
  bool equal = false;
  double max_delta = 0.0;
  std::vector<SlopeDelta> deltas;
};

/// True iff every pair of slopes agrees within `tolerance`.
inline SlopeComparison slope_equality(std::span<const LabeledFit> fits, double tolerance) {
  if (fits.size() < 2) throw ConfigError("slope comparison needs at least 2 fits");
  SlopeComparison out;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (std::size_t j = i + 1; j < fits.size(); ++j) {
      const double d = std::abs(fits[i].fit.slope - fits[j].fit.slope);
      out.deltas.push_back({fits[i].label, fits[j].label, d});
      out.max_delta = std::max(out.max_delta, d);
    }
  }
  out.equal = out.max_delta <= tolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepEntry {
  TokenizerConfig config;
  OracleResult oracle;
  UtilizationStats utilization;
  std::vector<WidthTrialPoint> search_trace;  // empty when the width was fixed
};

struct PowerLawEntry {
  ScalingScheme scaling;
  BinningScheme binning;
  PowerLawFit fit;

  std::string label() const { return std::string(to_string(scaling)) + "_" + to_string(binning); }
};

/// One Spearman row: utilization statistic vs oracle mean MASE across the
/// configurations sharing a vocabulary size.
struct UtilizationCorrelation {
  std::size_t vocab_size = 0;
  std::string statistic;  // "cramers_v" or "balance"
  CorrelationRow row;
};

struct SweepMetadata {
  std::string dataset_tag;
  std::uint64_t seed = 0;
  std::string tool_version = version;
  int schema_version = tsquant::schema_version;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  std::vector<PowerLawEntry> powerlaw_fits;
  std::vector<UtilizationCorrelation> correlations;
  SweepMetadata metadata;
};

struct SweepOptions {
  std::vector<ScalingScheme> scalings{ScalingScheme::mean, ScalingScheme::minmax, ScalingScheme::normal};
  std::vector<BinningScheme> binnings{BinningScheme::uniform, BinningScheme::normal, BinningScheme::expdecay};
  std::vector<std::size_t> vocab_sizes{512, 1024, 4096};
  bool tune = true;
  double fixed_width = 10.0;  // used when tune is false
  WidthSearchSpec search;
  std::uint64_t seed = 0;  // recorded in the metadata only
  std::size_t threads = 0;
};

/// Token histogram over every context and horizon of the dataset.
inline UtilizationStats dataset_utilization(const TokenizerConfig& config, const Dataset& dataset) {
  const BinLayout layout = config.layout();
  std::vector<std::size_t> counts(layout.size(), 0);
  for (const auto& w : dataset.windows) {
    const auto tw = tokenize_window(layout, config.scaling, w);
    for (Token t : tw.context.tokens) ++counts[t - 1];
    for (Token t : tw.horizon.tokens) ++counts[t - 1];
  }
  return utilization_from_counts(std::move(counts));
}

inline std::vector<UtilizationCorrelation> correlation_table(const SweepReport& report);

namespace detail {

template <class T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template <class Fn>
auto with_cell_context(const std::string& cell, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("sweep cell " + cell + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError("sweep cell " + cell + ": " + e.what());
  } catch (const Error& e) {
    throw InvariantError("sweep cell " + cell + ": " + e.what());
  }
}

}  // namespace detail

/// Runs every (scaling, binning, B) cell, then fits one power law per
/// (scaling, binning) pair when at least 3 vocabulary sizes were swept, and
/// builds the correlation table when every vocabulary size has at least 3
/// configurations.
inline SweepReport run_sweep(const Dataset& dataset, const SweepOptions& options) {
  const auto scalings = detail::sorted_unique(options.scalings);
  const auto binnings = detail::sorted_unique(options.binnings);
  const auto vocab = detail::sorted_unique(options.vocab_sizes);
  if (scalings.empty() || binnings.empty() || vocab.empty()) throw ConfigError("sweep grid must be non-empty");
  if (vocab.front() < 2) throw ConfigError("sweep vocabulary sizes must be at least 2");
  if (options.tune) {
    options.search.validate();
  } else if (!(options.fixed_width > 0.0)) {
    throw ConfigError("fixed width must be positive");
  }

  SweepReport report;
  report.metadata.dataset_tag = dataset.source_tag;
  report.metadata.seed = options.seed;

  for (auto scaling : scalings) {
    for (auto binning : binnings) {
      for (auto b : vocab) {
        const TokenizerConfig probe = TokenizerConfig::make(scaling, binning, b, options.fixed_width);
        report.entries.push_back(detail::with_cell_context(probe.key(), [&] {
          SweepEntry entry;
          if (options.tune) {
            auto tuned = tune_width(scaling, binning, b, dataset, options.search, options.threads);
            entry.oracle = std::move(tuned.result);
            entry.search_trace = std::move(tuned.trace);
          } else {
            entry.oracle = oracle_evaluate(probe, dataset, options.threads);
          }
          entry.config = entry.oracle.config;
          entry.utilization = dataset_utilization(entry.config, dataset);
          return entry;
        }));
      }
    }
  }

  if (vocab.size() >= 3) {
    for (auto scaling : scalings) {
      for (auto binning : binnings) {
        std::vector<std::pair<std::size_t, double>> points;
        for (const auto& e : report.entries) {
          if (e.config.scaling == scaling && e.config.binning == binning && e.oracle.mean_mase > 0.0) {
            points.emplace_back(e.config.vocab_size, e.oracle.mean_mase);
          }
        }
        if (points.size() >= 3) report.powerlaw_fits.push_back({scaling, binning, fit_powerlaw(points)});
      }
    }
  }

  if (scalings.size() * binnings.size() >= 3) report.correlations = correlation_table(report);
  return report;
}

/// For each vocabulary size, Spearman rho of Cramer's V (and of balance =
/// 1 - V) against oracle mean MASE across the configurations at that size.
/// Entry order does not matter.
inline std::vector<UtilizationCorrelation> correlation_table(const SweepReport& report) {
  std::map<std::size_t, std::vector<const SweepEntry*>> by_vocab;
  for (const auto& e : report.entries) by_vocab[e.config.vocab_size].push_back(&e);

  std::vector<UtilizationCorrelation> rows;
  for (auto& [b, group] : by_vocab) {
    if (group.size() < 3) {
      throw ConfigError("correlation table needs at least 3 configurations at B=" + std::to_string(b));
    }
    std::sort(group.begin(), group.end(),
              [](const SweepEntry* x, const SweepEntry* y) { return x->config.key() < y->config.key(); });
    std::vector<double> v, balance, mase_values;
    for (const auto* e : group) {
      v.push_back(e->utilization.cramers_v);
      balance.push_back(e->utilization.balance);
      mase_values.push_back(e->oracle.mean_mase);
    }
    const std::string prefix = "B=" + std::to_string(b) + " ";
    rows.push_back({b, "cramers_v", spearman(v, mase_values, prefix + "cramers_v~mean_mase")});
    rows.push_back({b, "balance", spearman(balance, mase_values, prefix + "balance~mean_mase")});
  }
  return rows;
}

}  // namespace tsquant
