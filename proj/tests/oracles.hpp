#pragma once

// Independent reference computations used only by the tests. None of these
// go through the library's own numeric paths.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace tsquant::reference {

/// Standard normal quantile by bisection on the erfc-based CDF.
inline double normal_quantile_bisection(double p) {
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Two-sided Student-t tail probability P(|T| > t) by composite Simpson
/// quadrature of the density over [0, |t|].
inline double student_t_two_sided_quadrature(double t, double df) {
  const double log_norm = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) - 0.5 * std::log(df * std::numbers::pi);
  auto pdf = [&](double x) { return std::exp(log_norm - (df + 1.0) / 2.0 * std::log1p(x * x / df)); };
  const double upper = std::abs(t);
  const int n = 200000;
  const double h = upper / n;
  double s = pdf(0.0) + pdf(upper);
  for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * pdf(i * h);
  return 1.0 - 2.0 * (s * h / 3.0);
}

/// Sample autocorrelation at `lag` (biased estimator).
inline double autocorrelation(std::span<const double> x, std::size_t lag) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    if (i + lag < x.size()) num += (x[i] - mean) * (x[i + lag] - mean);
  }
  return num / den;
}

/// Classic 1 - 6 sum d^2 / (n (n^2 - 1)); valid only without ties.
inline double spearman_no_ties(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  auto rank = [n](std::span<const double> v, std::size_t i) {
    double r = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (v[j] < v[i]) r += 1.0;
    }
    return r;
  };
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = rank(xs, i) - rank(ys, i);
    d2 += d * d;
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

/// Smallest total |raw - reconstruction| over every token sequence in
/// {1..B}^H, where a token t reconstructs as (centers[t-1] - b) / a.
inline double brute_force_min_total_error(std::span<const double> centers, double a, double b,
                                          std::span<const double> horizon) {
  const std::size_t bins = centers.size();
  const std::size_t h = horizon.size();
  std::vector<std::size_t> digits(h, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    double total = 0.0;
    for (std::size_t i = 0; i < h; ++i) total += std::abs(horizon[i] - (centers[digits[i]] - b) / a);
    best = std::min(best, total);
    std::size_t pos = 0;
    while (pos < h && ++digits[pos] == bins) digits[pos++] = 0;
    if (pos == h) break;
  }
  return best;
}

}  // namespace tsquant::reference
