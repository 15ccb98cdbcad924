#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsquant/error.hpp"
#include "tsquant/metrics.hpp"
#include "tsquant/numeric.hpp"
#include "tsquant/oracle.hpp"
#include "tsquant/quantizer.hpp"
#include "tsquant/scaling.hpp"
#include "tsquant/sweep.hpp"
#include "tsquant/version.hpp"

// JSON (nlohmann) and CSV encodings of the public value types. JSON numbers
// are written in shortest round-trip form; CSV numbers with 17 significant
// digits. Both are exact for every double.

namespace tsquant {

using nlohmann::json;

inline void to_json(json& j, const AffineScaler& s) {
  j = json{{"scheme", to_string(s.scheme())}, {"a", s.a()}, {"b", s.b()}, {"degenerate", s.degenerate()}};
}

inline AffineScaler scaler_from_json(const json& j) {
  try {
    return AffineScaler(parse_scaling_scheme(j.at("scheme").get<std::string>()), j.at("a").get<double>(),
                        j.at("b").get<double>(), j.value("degenerate", false));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid scaler JSON: ") + e.what());
  }
}

inline void to_json(json& j, const BinLayout& l) {
  j = json{{"scheme", to_string(l.scheme())}, {"B", l.size()},           {"width", l.width()},
           {"center_offset", l.center_offset()}, {"centers", l.centers()}, {"boundaries", l.boundaries()}};
}

/// Rejects any layout whose stored boundaries are not the midpoints of its
/// centers or that violates another layout invariant.
inline BinLayout layout_from_json(const json& j) {
  try {
    auto centers = j.at("centers").get<std::vector<double>>();
    const auto boundaries = j.at("boundaries").get<std::vector<double>>();
    if (j.at("B").get<std::size_t>() != centers.size()) throw ConfigError("layout JSON: B does not match centers");
    auto layout = BinLayout::from_parts(parse_binning_scheme(j.at("scheme").get<std::string>()),
                                        j.at("width").get<double>(), j.at("center_offset").get<double>(),
                                        std::move(centers));
    if (boundaries != layout.boundaries()) throw ConfigError("layout JSON: boundaries are not center midpoints");
    return layout;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid layout JSON: ") + e.what());
  }
}

inline void to_json(json& j, const TokenizerConfig& c) {
  j = json{{"scaling", to_string(c.scaling)},
           {"binning", to_string(c.binning)},
           {"B", c.vocab_size},
           {"width", c.width},
           {"center_offset", c.center_offset}};
}

inline TokenizerConfig config_from_json(const json& j) {
  try {
    TokenizerConfig c;
    c.scaling = parse_scaling_scheme(j.at("scaling").get<std::string>());
    c.binning = parse_binning_scheme(j.at("binning").get<std::string>());
    c.vocab_size = j.at("B").get<std::size_t>();
    c.width = j.at("width").get<double>();
    c.center_offset = j.value("center_offset", default_center_offset(c.scaling));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid tokenizer config JSON: ") + e.what());
  }
}

inline void to_json(json& j, const OracleResult& r) {
  j = json{{"config", r.config},
           {"mean_mase", r.mean_mase},
           {"median_mase", r.median_mase},
           {"n_windows_scored", r.n_windows_scored},
           {"n_windows_skipped", r.n_windows_skipped},
           {"clip_fraction", r.clip_fraction}};
}

inline OracleResult oracle_result_from_json(const json& j) {
  try {
    OracleResult r;
    r.config = config_from_json(j.at("config"));
    r.mean_mase = j.at("mean_mase").get<double>();
    r.median_mase = j.at("median_mase").get<double>();
    r.n_windows_scored = j.at("n_windows_scored").get<std::size_t>();
    r.n_windows_skipped = j.at("n_windows_skipped").get<std::size_t>();
    r.clip_fraction = j.at("clip_fraction").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid oracle result JSON: ") + e.what());
  }
}

inline void to_json(json& j, const UtilizationStats& u) {
  j = json{{"counts", u.counts},
           {"n", u.n},
           {"chi_squared", u.chi_squared},
           {"cramers_v", u.cramers_v},
           {"balance", u.balance},
           {"normalized_entropy", u.normalized_entropy}};
}

inline UtilizationStats utilization_from_json(const json& j) {
  try {
    return utilization_from_counts(j.at("counts").get<std::vector<std::size_t>>());
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid utilization JSON: ") + e.what());
  }
}

inline void to_json(json& j, const CorrelationRow& r) {
  j = json{{"label", r.label},
           {"rho", r.rho ? json(*r.rho) : json(nullptr)},
           {"p_value", r.p_value ? json(*r.p_value) : json(nullptr)},
           {"n_points", r.n_points},
           {"defined", r.defined()}};
}

inline void to_json(json& j, const PowerLawFit& f) {
  j = json{{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"degenerate", f.degenerate}};
}

inline void to_json(json& j, const WidthTrialPoint& p) { j = json{{"width", p.width}, {"mean_mase", p.mean_mase}}; }

inline constexpr const char* utilization_orientation_note =
    "cramers_v is a goodness-of-fit statistic against uniform token usage: 0 means perfectly even usage, "
    "1 means a single token. balance = 1 - cramers_v grows with evenness. Rows are reported for both "
    "orientations; rho is raw (negative rho for balance means more even usage goes with lower MASE).";

inline void to_json(json& j, const SweepReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back(json{{"config", e.config},
                           {"oracle", e.oracle},
                           {"utilization", e.utilization},
                           {"search_trace", e.search_trace}});
  }
  json fits = json::array();
  for (const auto& f : r.powerlaw_fits) {
    fits.push_back(json{{"scaling", to_string(f.scaling)}, {"binning", to_string(f.binning)}, {"fit", f.fit}});
  }
  json corr = json::array();
  for (const auto& c : r.correlations) {
    corr.push_back(json{{"vocab_size", c.vocab_size}, {"statistic", c.statistic}, {"correlation", c.row}});
  }
  j = json{{"schema_version", r.metadata.schema_version},
           {"metadata",
            {{"dataset_tag", r.metadata.dataset_tag},
             {"seed", r.metadata.seed},
             {"tool_version", r.metadata.tool_version}}},
           {"utilization_orientation", utilization_orientation_note},
           {"entries", std::move(entries)},
           {"powerlaw_fits", std::move(fits)},
           {"correlations", std::move(corr)}};
}

/// Reads the parts of a report needed to recompute correlations and fits.
inline SweepReport report_from_json(const json& j) {
  try {
    SweepReport r;
    r.metadata.schema_version = j.at("schema_version").get<int>();
    if (r.metadata.schema_version != schema_version) {
      throw InputError("unsupported report schema_version " + std::to_string(r.metadata.schema_version));
    }
    const auto& meta = j.at("metadata");
    r.metadata.dataset_tag = meta.value("dataset_tag", "");
    r.metadata.seed = meta.value("seed", std::uint64_t{0});
    r.metadata.tool_version = meta.value("tool_version", "");
    for (const auto& e : j.at("entries")) {
      SweepEntry entry;
      entry.config = config_from_json(e.at("config"));
      entry.oracle = oracle_result_from_json(e.at("oracle"));
      entry.utilization = utilization_from_json(e.at("utilization"));
      for (const auto& p : e.value("search_trace", json::array())) {
        entry.search_trace.push_back({p.at("width").get<double>(), p.at("mean_mase").get<double>()});
      }
      r.entries.push_back(std::move(entry));
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid sweep report JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV

inline void write_bounds_csv(std::ostream& out, const SweepReport& r) {
  out << "scaling,binning,B,width,mean_mase,median_mase,clip_fraction\n";
  for (const auto& e : r.entries) {
    out << to_string(e.config.scaling) << ',' << to_string(e.config.binning) << ',' << e.config.vocab_size << ','
        << format_double(e.config.width) << ',' << format_double(e.oracle.mean_mase) << ','
        << format_double(e.oracle.median_mase) << ',' << format_double(e.oracle.clip_fraction) << '\n';
  }
}

inline void write_histogram_csv(std::ostream& out, const UtilizationStats& u) {
  out << "token,count\n";
  for (std::size_t j = 0; j < u.counts.size(); ++j) out << (j + 1) << ',' << u.counts[j] << '\n';
}

inline void write_powerlaw_csv(std::ostream& out, const SweepReport& r) {
  out << "scaling,binning,slope,intercept,r_squared,degenerate\n";
  for (const auto& f : r.powerlaw_fits) {
    out << to_string(f.scaling) << ',' << to_string(f.binning) << ',' << format_double(f.fit.slope) << ','
        << format_double(f.fit.intercept) << ',' << format_double(f.fit.r_squared) << ','
        << (f.fit.degenerate ? "true" : "false") << '\n';
  }
}

inline void write_correlations_csv(std::ostream& out, const std::vector<UtilizationCorrelation>& rows) {
  out << "vocab_size,statistic,rho,p_value,n_points,defined\n";
  for (const auto& c : rows) {
    out << c.vocab_size << ',' << c.statistic << ',' << (c.row.rho ? format_double(*c.row.rho) : "") << ','
        << (c.row.p_value ? format_double(*c.row.p_value) : "") << ',' << c.row.n_points << ','
        << (c.row.defined() ? "true" : "false") << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const std::vector<WidthTrialPoint>& trace) {
  out << "width,mean_mase\n";
  for (const auto& p : trace) out << format_double(p.width) << ',' << format_double(p.mean_mase) << '\n';
}

}  // namespace tsquant
