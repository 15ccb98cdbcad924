#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "tsquant/error.hpp"
#include "tsquant/numeric.hpp"
#include "tsquant/quantizer.hpp"

namespace tsquant {

// ---------------------------------------------------------------------------
// MASE

/// Mean over t = m+1..C of |x_t - x_{t-m}|.
inline double seasonal_error(std::span<const double> context, std::size_t m) {
  if (m < 1 || context.size() <= m) throw ConfigError("seasonal error needs context length > m >= 1");
  std::vector<double> diffs(context.size() - m);
  for (std::size_t t = m; t < context.size(); ++t) diffs[t - m] = std::abs(context[t] - context[t - m]);
  return mean_of(diffs);
}

/// mean(|actual - predicted|) / seasonal_error(context, m).
/// Throws ZeroSeasonalError when the denominator is zero; the caller owns the skip policy.
inline double mase(std::span<const double> actual, std::span<const double> predicted,
                   std::span<const double> context, std::size_t m = 1) {
  if (actual.size() != predicted.size()) throw ConfigError("mase: actual and predicted differ in length");
  if (actual.empty()) throw ConfigError("mase: empty forecast");
  const double scale = seasonal_error(context, m);
  if (!(scale > 0.0)) throw ZeroSeasonalError();
  std::vector<double> errors(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) errors[i] = std::abs(actual[i] - predicted[i]);
  return mean_of(errors) / scale;
}

// ---------------------------------------------------------------------------
// Token-space utilization

struct UtilizationStats {
  std::vector<std::size_t> counts;  // counts[j] = occurrences of token j+1
  std::size_t n = 0;
  double chi_squared = 0.0;
  double cramers_v = 0.0;  // 0 = perfectly uniform usage, 1 = one token only
  double balance = 1.0;    // 1 - cramers_v
  double normalized_entropy = 1.0;
};

/// Goodness-of-fit of the token histogram against uniform usage over all B
/// tokens (empty bins included): chi2 = sum (o_j - n/B)^2 / (n/B),
/// V = sqrt(chi2 / (n (B - 1))).
inline UtilizationStats utilization_from_counts(std::vector<std::size_t> counts) {
  const std::size_t bins = counts.size();
  if (bins < 2) throw ConfigError("utilization needs B >= 2");
  UtilizationStats s;
  s.n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (s.n == 0) throw InputError("utilization of an empty token sequence");

  const double n = static_cast<double>(s.n);
  const double b = static_cast<double>(bins);
  const double expected = n / b;
  std::vector<double> chi_terms(bins);
  std::vector<double> entropy_terms(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    const double o = static_cast<double>(counts[j]);
    chi_terms[j] = (o - expected) * (o - expected) / expected;
    const double p = o / n;
    entropy_terms[j] = p > 0.0 ? -p * std::log(p) : 0.0;
  }
  s.chi_squared = compensated_sum(chi_terms);
  s.cramers_v = std::clamp(std::sqrt(s.chi_squared / (n * (b - 1.0))), 0.0, 1.0);
  s.balance = 1.0 - s.cramers_v;
  s.normalized_entropy = std::clamp(compensated_sum(entropy_terms) / std::log(b), 0.0, 1.0);
  s.counts = std::move(counts);
  return s;
}

inline UtilizationStats utilization(std::span<const Token> tokens, std::size_t bins) {
  if (tokens.empty()) throw InputError("utilization of an empty token sequence");
  std::vector<std::size_t> counts(bins, 0);
  for (Token t : tokens) {
    if (t < 1 || t > bins) throw ConfigError("token " + std::to_string(t) + " outside [1, B]");
    ++counts[t - 1];
  }
  return utilization_from_counts(std::move(counts));
}

inline UtilizationStats utilization(const TokenSequence& seq, std::size_t bins) {
  return utilization(seq.tokens, bins);
}

// ---------------------------------------------------------------------------
// Spearman rank correlation

/// rho and p are empty when rho is undefined (a constant input).
struct CorrelationRow {
  std::string label;
  std::optional<double> rho;
  std::optional<double> p_value;
  std::size_t n_points = 0;

  bool defined() const noexcept { return rho.has_value(); }
};

/// 1-based ranks; tied values share the average of their ranks.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of average ranks. The two-sided p-value uses the
/// asymptotic statistic t = rho sqrt((n-2) / (1-rho^2)) against Student-t
/// with n-2 degrees of freedom; |rho| = 1 gives p = 0.
inline CorrelationRow spearman(std::span<const double> xs, std::span<const double> ys, std::string label = {}) {
  if (xs.size() != ys.size()) throw ConfigError("spearman: inputs differ in length");
  if (xs.size() < 3) throw ConfigError("spearman: need at least 3 points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw InputError("spearman: non-finite input");
  }

  CorrelationRow row;
  row.label = std::move(label);
  row.n_points = xs.size();

  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double mean_rank = (static_cast<double>(xs.size()) + 1.0) / 2.0;
  std::vector<double> sxy(xs.size()), sxx(xs.size()), syy(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = rx[i] - mean_rank;
    const double dy = ry[i] - mean_rank;
    sxy[i] = dx * dy;
    sxx[i] = dx * dx;
    syy[i] = dy * dy;
  }
  const double vx = compensated_sum(sxx);
  const double vy = compensated_sum(syy);
  if (!(vx > 0.0) || !(vy > 0.0)) return row;

  double rho = std::clamp(compensated_sum(sxy) / std::sqrt(vx * vy), -1.0, 1.0);
  if (1.0 - std::abs(rho) <= 1e-12) {
    row.rho = rho > 0.0 ? 1.0 : -1.0;
    row.p_value = 0.0;
    return row;
  }
  const double df = static_cast<double>(xs.size()) - 2.0;
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  const boost::math::students_t_distribution<double> dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  row.rho = rho;
  row.p_value = std::clamp(p, 0.0, 1.0);
  return row;
}

}  // namespace tsquant
