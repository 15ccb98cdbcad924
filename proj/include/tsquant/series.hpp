#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <json.hpp>

#include "tsquant/error.hpp"
#include "tsquant/numeric.hpp"

namespace tsquant {

/// One (context, horizon) pair cut from a univariate series.
struct TimeSeriesWindow {
  std::vector<double> context;
  std::vector<double> horizon;
  std::string series_id;
  std::size_t seasonality = 1;

  /// Throws InputError if any invariant (C >= 2, H >= 1, 1 <= m < C,
  /// all values finite) is violated.
  void validate() const {
    if (context.size() < 2) throw InputError("window '" + series_id + "': context needs at least 2 points");
    if (horizon.empty()) throw InputError("window '" + series_id + "': empty horizon");
    if (seasonality < 1 || seasonality >= context.size()) {
      throw InputError("window '" + series_id + "': seasonality must satisfy 1 <= m < C");
    }
    for (double v : context) {
      if (!std::isfinite(v)) throw InputError("window '" + series_id + "': non-finite context value");
    }
    for (double v : horizon) {
      if (!std::isfinite(v)) throw InputError("window '" + series_id + "': non-finite horizon value");
    }
  }
};

/// Ordered, non-empty collection of valid windows. Treated as immutable once built.
struct Dataset {
  std::vector<TimeSeriesWindow> windows;
  std::string source_tag;
  std::size_t dropped_series = 0;  // series containing NaN/inf
  std::size_t short_series = 0;    // series too short for a single window
  std::vector<std::string> warnings;
};

/// A raw univariate series, before windowing.
struct Series {
  std::string id;
  std::vector<double> values;
};

struct WindowSpec {
  std::size_t context_len = 192;
  std::size_t horizon_len = 64;
  std::size_t seasonality = 1;

  void validate() const {
    if (context_len < 2) throw ConfigError("context length must be at least 2");
    if (horizon_len < 1) throw ConfigError("horizon length must be at least 1");
    if (seasonality < 1 || seasonality >= context_len) {
      throw ConfigError("seasonality must satisfy 1 <= m < context length");
    }
  }
};

/// Cuts consecutive non-overlapping windows of C + H points from the start of
/// the series. A trailing remainder shorter than C + H is discarded.
inline std::vector<TimeSeriesWindow> make_windows(const Series& series, const WindowSpec& spec) {
  const std::size_t span = spec.context_len + spec.horizon_len;
  std::vector<TimeSeriesWindow> out;
  for (std::size_t start = 0; start + span <= series.values.size(); start += span) {
    TimeSeriesWindow w;
    const auto first = series.values.begin() + static_cast<std::ptrdiff_t>(start);
    const auto split = first + static_cast<std::ptrdiff_t>(spec.context_len);
    w.context.assign(first, split);
    w.horizon.assign(split, split + static_cast<std::ptrdiff_t>(spec.horizon_len));
    w.series_id = series.id;
    w.seasonality = spec.seasonality;
    out.push_back(std::move(w));
  }
  return out;
}

/// Windows every series. Series with a non-finite value are dropped whole;
/// series shorter than one window are skipped. Both are recorded as warnings.
inline Dataset make_dataset(const std::vector<Series>& series, const WindowSpec& spec, std::string source_tag) {
  spec.validate();
  Dataset ds;
  ds.source_tag = std::move(source_tag);
  for (const auto& s : series) {
    const bool finite = std::all_of(s.values.begin(), s.values.end(), [](double v) { return std::isfinite(v); });
    if (!finite) {
      ++ds.dropped_series;
      ds.warnings.push_back("dropped series '" + s.id + "': non-finite value");
      continue;
    }
    auto windows = make_windows(s, spec);
    if (windows.empty()) {
      ++ds.short_series;
      ds.warnings.push_back("skipped series '" + s.id + "': shorter than context + horizon");
      continue;
    }
    for (auto& w : windows) ds.windows.push_back(std::move(w));
  }
  if (ds.windows.empty()) throw InputError("no usable windows in " + ds.source_tag);
  return ds;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, out);
  return result.ec == std::errc{} && result.ptr == end && !text.empty();
}

inline std::string where(std::string_view source, std::size_t line_no) {
  return std::string(source) + ":" + std::to_string(line_no);
}

}  // namespace detail

/// Parses `series_id,timestamp_index,value` rows. Rows of one series must be
/// contiguous with strictly increasing indices. Non-finite values are kept
/// here and handled by make_dataset.
inline std::vector<Series> read_series_csv(std::istream& in, std::string_view source = "<csv>") {
  std::vector<Series> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::int64_t last_index = 0;
  std::unordered_set<std::string> finished;

  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split_csv_line(trimmed);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 3 && fields[0] == "series_id" && fields[1] == "timestamp_index" && fields[2] == "value") {
        continue;
      }
      throw InputError(detail::where(source, line_no) + ": expected header 'series_id,timestamp_index,value'");
    }
    if (fields.size() != 3) {
      throw InputError(detail::where(source, line_no) + ": expected 3 columns, found " + std::to_string(fields.size()));
    }
    std::int64_t index = 0;
    if (!detail::parse_number(fields[1], index)) {
      throw InputError(detail::where(source, line_no) + ": unparseable timestamp_index '" + std::string(fields[1]) + "'");
    }
    double value = 0.0;
    if (!detail::parse_number(fields[2], value)) {
      throw InputError(detail::where(source, line_no) + ": unparseable value '" + std::string(fields[2]) + "'");
    }
    if (fields[0].empty()) throw InputError(detail::where(source, line_no) + ": empty series_id");

    if (out.empty() || out.back().id != fields[0]) {
      if (!out.empty()) finished.insert(out.back().id);
      if (finished.contains(std::string(fields[0]))) {
        throw InputError(detail::where(source, line_no) + ": rows of series '" + std::string(fields[0]) +
                         "' are not contiguous");
      }
      out.push_back(Series{std::string(fields[0]), {}});
    } else if (index <= last_index) {
      throw InputError(detail::where(source, line_no) + ": timestamp_index not increasing");
    }
    last_index = index;
    out.back().values.push_back(value);
  }
  if (!header_seen) throw InputError(std::string(source) + ": empty file");
  return out;
}

/// One JSON object per line: {"id": "...", "values": [..]}. `null` entries
/// are read as NaN so the series is dropped rather than rejected.
inline std::vector<Series> read_series_jsonl(std::istream& in, std::string_view source = "<jsonl>") {
  std::vector<Series> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(detail::where(source, line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("values") || !obj["values"].is_array()) {
      throw InputError(detail::where(source, line_no) + ": expected object with 'id' and 'values'");
    }
    Series s;
    s.id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
    for (const auto& v : obj["values"]) {
      if (v.is_number()) {
        s.values.push_back(v.get<double>());
      } else if (v.is_null()) {
        s.values.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        throw InputError(detail::where(source, line_no) + ": non-numeric entry in 'values'");
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Loads a CSV or JSONL (by `.jsonl` / `.ndjson` extension) file and windows it.
inline Dataset load_dataset(const std::filesystem::path& path, const WindowSpec& spec) {
  spec.validate();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  const auto ext = path.extension().string();
  const bool jsonl = ext == ".jsonl" || ext == ".ndjson";
  auto series = jsonl ? read_series_jsonl(in, path.string()) : read_series_csv(in, path.string());
  return make_dataset(series, spec, path.filename().string());
}

inline Dataset load_csv(const std::filesystem::path& path, std::size_t context_len, std::size_t horizon_len,
                        std::size_t seasonality = 1) {
  return load_dataset(path, WindowSpec{context_len, horizon_len, seasonality});
}

inline void write_series_csv(std::ostream& out, const std::vector<Series>& series) {
  out << "series_id,timestamp_index,value\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out << s.id << ',' << i << ',' << format_double(s.values[i]) << '\n';
    }
  }
}

/// Writes every window as context followed by horizon. Windows of the same
/// series are emitted back to back so reloading with the same WindowSpec
/// yields the same windows.
inline void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  out << "series_id,timestamp_index,value\n";
  std::size_t index = 0;
  for (std::size_t w = 0; w < ds.windows.size(); ++w) {
    const auto& win = ds.windows[w];
    if (w == 0 || ds.windows[w - 1].series_id != win.series_id) index = 0;
    for (double v : win.context) out << win.series_id << ',' << index++ << ',' << format_double(v) << '\n';
    for (double v : win.horizon) out << win.series_id << ',' << index++ << ',' << format_double(v) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic data

enum class SynthKind { gaussian_ar1, heavy_tailed, seasonal_sine };

inline const char* to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::gaussian_ar1: return "gaussian_ar1";
    case SynthKind::heavy_tailed: return "heavy_tailed";
    case SynthKind::seasonal_sine: return "seasonal_sine";
  }
  return "?";
}

inline SynthKind parse_synth_kind(std::string_view name) {
  if (name == "gaussian_ar1") return SynthKind::gaussian_ar1;
  if (name == "heavy_tailed") return SynthKind::heavy_tailed;
  if (name == "seasonal_sine") return SynthKind::seasonal_sine;
  throw ConfigError("unknown synthetic kind '" + std::string(name) + "'");
}

inline constexpr std::size_t synthetic_min_length = 32;
inline constexpr std::size_t synthetic_season = 24;

/// Deterministic generator; Boost.Random engines and distributions give the
/// same stream on every platform.
///   gaussian_ar1:  x_t = 0.8 x_{t-1} + e_t, e_t ~ N(0, 1)
///   heavy_tailed:  same recursion with e_t ~ Student-t(3)
///   seasonal_sine: amp * sin(2 pi t / 24) + slope * t + N(0, 0.1^2),
///                  amp ~ U[0.5, 5], slope ~ U[-0.01, 0.01] per series
inline std::vector<Series> generate_series(SynthKind kind, std::size_t n_series, std::size_t length,
                                           std::uint64_t seed) {
  if (n_series == 0) throw ConfigError("n_series must be positive");
  if (length < synthetic_min_length) throw ConfigError("synthetic series length must be at least 32");

  boost::random::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  boost::random::student_t_distribution<double> student(3.0);
  boost::random::uniform_real_distribution<double> amplitude(0.5, 5.0);
  boost::random::uniform_real_distribution<double> trend(-0.01, 0.01);

  std::vector<Series> out;
  out.reserve(n_series);
  for (std::size_t s = 0; s < n_series; ++s) {
    Series series;
    series.id = std::string(to_string(kind)) + "_" + std::to_string(s);
    series.values.reserve(length);
    switch (kind) {
      case SynthKind::gaussian_ar1:
      case SynthKind::heavy_tailed: {
        double x = 0.0;
        for (std::size_t t = 0; t < length; ++t) {
          const double eps = kind == SynthKind::gaussian_ar1 ? normal(rng) : student(rng);
          x = 0.8 * x + eps;
          series.values.push_back(x);
        }
        break;
      }
      case SynthKind::seasonal_sine: {
        const double amp = amplitude(rng);
        const double slope = trend(rng);
        constexpr double period = static_cast<double>(synthetic_season);
        for (std::size_t t = 0; t < length; ++t) {
          const double td = static_cast<double>(t);
          series.values.push_back(amp * std::sin(2.0 * std::numbers::pi * td / period) + slope * td +
                                  0.1 * normal(rng));
        }
        break;
      }
    }
    out.push_back(std::move(series));
  }
  return out;
}

inline Dataset generate_synthetic(SynthKind kind, std::size_t n_series, std::size_t length, std::uint64_t seed,
                                  const WindowSpec& spec) {
  return make_dataset(generate_series(kind, n_series, length, seed), spec,
                      std::string("synthetic:") + to_string(kind) + ":seed=" + std::to_string(seed));
}

/// Without an explicit WindowSpec the horizon is the last quarter of the series.
inline Dataset generate_synthetic(SynthKind kind, std::size_t n_series, std::size_t length, std::uint64_t seed) {
  const std::size_t horizon = std::max<std::size_t>(1, length / 4);
  return generate_synthetic(kind, n_series, length, seed, WindowSpec{length - horizon, horizon, 1});
}

}  // namespace tsquant
