#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "tsquant/error.hpp"
#include "tsquant/numeric.hpp"

namespace tsquant {

/// Token ids are 1-based: a layout with B bins emits tokens 1..B.
using Token = std::uint32_t;

enum class BinningScheme { uniform, normal, expdecay };

inline const char* to_string(BinningScheme s) {
  switch (s) {
    case BinningScheme::uniform: return "uniform";
    case BinningScheme::normal: return "normal";
    case BinningScheme::expdecay: return "expdecay";
  }
  return "?";
}

inline BinningScheme parse_binning_scheme(std::string_view name) {
  if (name == "uniform") return BinningScheme::uniform;
  if (name == "normal") return BinningScheme::normal;
  if (name == "expdecay" || name == "exponential") return BinningScheme::expdecay;
  throw ConfigError("unknown binning scheme '" + std::string(name) + "' (expected uniform, normal or expdecay)");
}

namespace detail {

/// Unit-free center positions for a scheme, symmetric about 0 by construction
/// (the upper half mirrors the lower half exactly).
inline std::vector<double> raw_centers(BinningScheme scheme, std::size_t bins) {
  std::vector<double> r(bins, 0.0);
  const double b = static_cast<double>(bins);
  const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
  for (std::size_t i = 0; i < bins / 2; ++i) {
    const double k = static_cast<double>(i);  // 0-based
    double value = 0.0;
    switch (scheme) {
      case BinningScheme::uniform:
        value = k - (b - 1.0) / 2.0;
        break;
      case BinningScheme::normal:
        // Mid-quantile of the i-th equal-mass slice of N(0, 1).
        value = boost::math::quantile(std_normal, (2.0 * k + 1.0) / (2.0 * b));
        break;
      case BinningScheme::expdecay: {
        // u in (-1, 0); inverse CDF of a two-sided exponential.
        const double u = -1.0 + (2.0 * k + 1.0) / b;
        value = std::log1p(-std::abs(u));
        break;
      }
    }
    r[i] = value;
    r[bins - 1 - i] = -value;
  }
  return r;
}

}  // namespace detail

/// Ordered bin centers c_1..c_B with midpoint boundaries b_i = (c_i + c_{i+1}) / 2.
/// The layout spans exactly `width` = c_B - c_1 and is centered on `center_offset`.
class BinLayout {
 public:
  static BinLayout build(BinningScheme scheme, std::size_t bins, double width, double center_offset) {
    if (bins < 2) throw ConfigError("vocabulary size must be at least 2");
    if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("layout width must be positive and finite");
    if (!std::isfinite(center_offset)) throw ConfigError("center offset must be finite");

    const auto raw = detail::raw_centers(scheme, bins);
    const double scale = width / (raw.back() - raw.front());
    std::vector<double> centers(bins);
    for (std::size_t i = 0; i < bins; ++i) centers[i] = center_offset + raw[i] * scale;
    return from_parts(scheme, width, center_offset, std::move(centers));
  }

  /// Builds from explicit centers (e.g. a deserialized layout). Boundaries are
  /// recomputed; every layout invariant is checked.
  static BinLayout from_parts(BinningScheme scheme, double width, double center_offset, std::vector<double> centers) {
    BinLayout layout;
    layout.scheme_ = scheme;
    layout.width_ = width;
    layout.center_offset_ = center_offset;
    layout.centers_ = std::move(centers);
    layout.boundaries_.resize(layout.centers_.empty() ? 0 : layout.centers_.size() - 1);
    for (std::size_t i = 0; i + 1 < layout.centers_.size(); ++i) {
      layout.boundaries_[i] = 0.5 * (layout.centers_[i] + layout.centers_[i + 1]);
    }
    layout.validate();
    return layout;
  }

  /// Throws ConfigError if a layout invariant does not hold.
  void validate() const {
    const std::size_t b = centers_.size();
    if (b < 2) throw ConfigError("layout needs at least 2 centers");
    if (boundaries_.size() != b - 1) throw ConfigError("layout needs B - 1 boundaries");
    if (!(width_ > 0.0) || !std::isfinite(width_)) throw ConfigError("layout width must be positive and finite");
    for (std::size_t i = 0; i + 1 < b; ++i) {
      if (!std::isfinite(centers_[i]) || !(centers_[i] < boundaries_[i] && boundaries_[i] < centers_[i + 1])) {
        throw ConfigError("layout centers are not strictly separated at bin " + std::to_string(i + 1) +
                          " (width too small for this vocabulary?)");
      }
    }
    const double span = centers_.back() - centers_.front();
    if (std::abs(span - width_) > 1e-9 * width_) throw ConfigError("layout span does not match width");
    const double mid = 0.5 * (centers_.front() + centers_.back());
    if (std::abs(mid - center_offset_) > 1e-9 * std::max(1.0, std::abs(center_offset_))) {
      throw ConfigError("layout midpoint does not match center offset");
    }
  }

  BinningScheme scheme() const noexcept { return scheme_; }
  std::size_t size() const noexcept { return centers_.size(); }
  double width() const noexcept { return width_; }
  double center_offset() const noexcept { return center_offset_; }
  const std::vector<double>& centers() const noexcept { return centers_; }
  const std::vector<double>& boundaries() const noexcept { return boundaries_; }

  /// q(x): 1 if x < b_1, i+1 if b_i <= x < b_{i+1}, B if x >= b_{B-1}.
  Token token_of(double x) const noexcept {
    const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), x);
    return static_cast<Token>(1 + (it - boundaries_.begin()));
  }

  /// d(t): center of bin t. Throws ConfigError outside [1, B].
  double center_of(Token t) const {
    if (t < 1 || t > centers_.size()) {
      throw ConfigError("token " + std::to_string(t) + " outside [1, " + std::to_string(centers_.size()) + "]");
    }
    return centers_[t - 1];
  }

  /// Stable textual identity, e.g. "uniform:B=4:W=3:mu=0".
  std::string id() const {
    return std::string(to_string(scheme_)) + ":B=" + std::to_string(size()) + ":W=" + format_double(width_) +
           ":mu=" + format_double(center_offset_);
  }

 private:
  BinLayout() = default;

  BinningScheme scheme_ = BinningScheme::uniform;
  double width_ = 0.0;
  double center_offset_ = 0.0;
  std::vector<double> centers_;
  std::vector<double> boundaries_;
};

inline BinLayout build_layout(BinningScheme scheme, std::size_t bins, double width, double center_offset) {
  return BinLayout::build(scheme, bins, width, center_offset);
}

struct TokenSequence {
  std::vector<Token> tokens;
  std::string layout_id;
  std::size_t clipped_low = 0;   // inputs below b_1
  std::size_t clipped_high = 0;  // inputs at or above b_{B-1}
};

inline TokenSequence quantize(const BinLayout& layout, std::span<const double> scaled) {
  TokenSequence out;
  out.layout_id = layout.id();
  out.tokens.reserve(scaled.size());
  const double lo = layout.boundaries().front();
  const double hi = layout.boundaries().back();
  for (double x : scaled) {
    out.tokens.push_back(layout.token_of(x));
    if (x < lo) ++out.clipped_low;
    if (x >= hi) ++out.clipped_high;
  }
  return out;
}

inline std::vector<double> dequantize(const BinLayout& layout, std::span<const Token> tokens) {
  std::vector<double> out;
  out.reserve(tokens.size());
  for (Token t : tokens) out.push_back(layout.center_of(t));
  return out;
}

}  // namespace tsquant
