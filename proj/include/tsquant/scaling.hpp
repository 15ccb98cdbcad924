#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsquant/error.hpp"
#include "tsquant/numeric.hpp"

namespace tsquant {

enum class ScalingScheme { mean, minmax, normal };

inline const char* to_string(ScalingScheme s) {
  switch (s) {
    case ScalingScheme::mean: return "mean";
    case ScalingScheme::minmax: return "minmax";
    case ScalingScheme::normal: return "normal";
  }
  return "?";
}

inline ScalingScheme parse_scaling_scheme(std::string_view name) {
  if (name == "mean") return ScalingScheme::mean;
  if (name == "minmax" || name == "min-max") return ScalingScheme::minmax;
  if (name == "normal") return ScalingScheme::normal;
  throw ConfigError("unknown scaling scheme '" + std::string(name) + "' (expected mean, minmax or normal)");
}

/// Per-series affine normalization x~ = a x + b, fitted on the context only.
///
///   mean:   a = 1 / mean|x|,         b = 0
///   minmax: a = 1 / (max - min),     b = -a min
///   normal: a = 1 / sigma,           b = -mu / sigma   (population sigma)
///
/// A context on which the scheme degenerates (zero mean |x|, zero range,
/// zero sigma) gets a = 1, b = -mu: centered but not rescaled, with
/// `degenerate()` set.
class AffineScaler {
 public:
  AffineScaler(ScalingScheme scheme, double a, double b, bool degenerate = false)
      : scheme_(scheme), a_(a), b_(b), degenerate_(degenerate) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("scaler coefficients must be finite");
    if (a <= 0.0) throw ConfigError("scaler multiplier must be positive");
  }

  static AffineScaler fit(ScalingScheme scheme, std::span<const double> context) {
    if (context.empty()) throw InputError("cannot fit a scaler on an empty context");
    for (double v : context) {
      if (!std::isfinite(v)) throw InputError("cannot fit a scaler on non-finite values");
    }
    const double n = static_cast<double>(context.size());
    const double mu = mean_of(context);
    auto fallback = [&] { return AffineScaler(scheme, 1.0, -mu, true); };

    switch (scheme) {
      case ScalingScheme::mean: {
        std::vector<double> abs_values(context.size());
        std::transform(context.begin(), context.end(), abs_values.begin(), [](double v) { return std::abs(v); });
        const double mean_abs = compensated_sum(abs_values) / n;
        if (!(mean_abs > 0.0) || !std::isfinite(1.0 / mean_abs)) return fallback();
        return AffineScaler(scheme, 1.0 / mean_abs, 0.0);
      }
      case ScalingScheme::minmax: {
        const auto [lo, hi] = std::minmax_element(context.begin(), context.end());
        const double range = *hi - *lo;
        if (!(range > 0.0) || !std::isfinite(1.0 / range)) return fallback();
        const double a = 1.0 / range;
        return AffineScaler(scheme, a, -a * *lo);
      }
      case ScalingScheme::normal: {
        std::vector<double> sq(context.size());
        std::transform(context.begin(), context.end(), sq.begin(), [mu](double v) { return (v - mu) * (v - mu); });
        const double sigma = std::sqrt(compensated_sum(sq) / n);
        if (!(sigma > 0.0) || !std::isfinite(1.0 / sigma)) return fallback();
        return AffineScaler(scheme, 1.0 / sigma, -mu / sigma);
      }
    }
    throw InvariantError("unhandled scaling scheme");
  }

  ScalingScheme scheme() const noexcept { return scheme_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  bool degenerate() const noexcept { return degenerate_; }

  double apply(double x) const noexcept { return a_ * x + b_; }
  double invert(double y) const noexcept { return (y - b_) / a_; }

  std::vector<double> apply(std::span<const double> values) const {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [this](double v) { return apply(v); });
    return out;
  }

  std::vector<double> invert(std::span<const double> values) const {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [this](double v) { return invert(v); });
    return out;
  }

  friend bool operator==(const AffineScaler&, const AffineScaler&) = default;

 private:
  ScalingScheme scheme_;
  double a_;
  double b_;
  bool degenerate_;
};

inline AffineScaler fit_scaler(ScalingScheme scheme, std::span<const double> context) {
  return AffineScaler::fit(scheme, context);
}

}  // namespace tsquant
