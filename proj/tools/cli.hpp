#pragma once

// Command implementations for the `tsquant` tool. Kept in a header so the
// test suite can drive `run()` in-process.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsquant/tsquant.hpp"

namespace tsquant::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { exit_ok = 0, exit_input = 1, exit_config = 2, exit_internal = 3 };

/// Binds CLI11 options to JSON keys so a `--config` file can fill in any flag
/// that was not given on the command line, and the effective values can be
/// echoed back out.
class FlagRegistry {
 public:
  template <class T>
  CLI::Option* option(CLI::App* app, const std::string& name, T& target, const std::string& help) {
    auto* opt = app->add_option("--" + name, target, help)->capture_default_str();
    add(name, opt, target);
    return opt;
  }

  template <class T>
  CLI::Option* list(CLI::App* app, const std::string& name, std::vector<T>& target, const std::string& help) {
    auto* opt = app->add_option("--" + name, target, help)->delimiter(',')->capture_default_str();
    add(name, opt, target);
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& spec, const std::string& name, bool& target,
                    const std::string& help) {
    auto* opt = app->add_flag(spec, target, help)->capture_default_str();
    add(name, opt, target);
    return opt;
  }

  void merge(const json& config) {
    if (!config.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : config.items()) {
      if (key == "subcommand") continue;
      auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == key; });
      if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
      if (it->opt->count() > 0) continue;  // command line wins
      try {
        it->set(value);
      } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
      }
    }
  }

  json resolved() const {
    json out = json::object();
    for (const auto& e : entries_) out[e.name] = e.get();
    return out;
  }

 private:
  struct Entry {
    std::string name;
    CLI::Option* opt;
    std::function<void(const json&)> set;
    std::function<json()> get;
  };

  template <class T>
  void add(const std::string& name, CLI::Option* opt, T& target) {
    entries_.push_back(Entry{name, opt, [&target](const json& j) { target = j.get<T>(); },
                             [&target] { return json(target); }});
  }

  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Parameter bundles shared between subcommands

struct DatasetArgs {
  std::string input;
  std::size_t context = 192;
  std::size_t horizon = 64;
  std::size_t seasonality = 1;

  void bind(CLI::App* app, FlagRegistry& reg) {
    reg.option(app, "input", input, "Dataset file (CSV series_id,timestamp_index,value or JSONL {id, values})");
    reg.option(app, "context", context, "Context length C");
    reg.option(app, "horizon", horizon, "Horizon length H");
    reg.option(app, "seasonality", seasonality, "Seasonal period m used by MASE");
  }

  Dataset load(std::ostream& err) const {
    if (input.empty()) throw ConfigError("--input is required");
    const WindowSpec spec{context, horizon, seasonality};
    spec.validate();
    auto ds = load_dataset(input, spec);
    for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
    return ds;
  }
};

struct TokenizerArgs {
  std::string scaling = "normal";
  std::string binning = "uniform";
  std::size_t vocab = 512;
  double width = 10.0;
  double center_offset = std::numeric_limits<double>::quiet_NaN();

  void bind(CLI::App* app, FlagRegistry& reg, bool with_width = true) {
    reg.option(app, "scaling", scaling, "Scaling scheme: mean | minmax | normal");
    reg.option(app, "binning", binning, "Binning scheme: uniform | normal | expdecay");
    reg.option(app, "vocab", vocab, "Vocabulary size B (number of bins)");
    if (with_width) reg.option(app, "width", width, "Layout width W = c_B - c_1 in scaled units");
    reg.option(app, "center-offset", center_offset,
               "Layout midpoint in scaled units (default: 0.5 for minmax, 0 otherwise)");
  }

  /// Fills the default center offset and validates.
  TokenizerConfig resolve() {
    const auto s = parse_scaling_scheme(scaling);
    const auto b = parse_binning_scheme(binning);
    if (std::isnan(center_offset)) center_offset = default_center_offset(s);
    TokenizerConfig cfg{s, b, vocab, width, center_offset};
    cfg.validate();
    return cfg;
  }
};

struct SearchArgs {
  WidthSearchSpec spec;

  void bind(CLI::App* app, FlagRegistry& reg) {
    reg.option(app, "w-lo", spec.w_lo, "Lower end of the width search range");
    reg.option(app, "w-hi", spec.w_hi, "Upper end of the width search range");
    reg.option(app, "grid-points", spec.grid_points, "Log-spaced grid points before golden-section refinement");
    reg.option(app, "budget", spec.budget, "Maximum number of oracle evaluations per tuned width");
  }
};

// ---------------------------------------------------------------------------
// Output helpers

inline fs::path parent_dir(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

/// Writes via a temporary buffer so a failing command leaves no partial file.
inline void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << contents;
  if (!out) throw InputError("write failed for " + path.string());
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline void write_resolved_config(const fs::path& dir, const std::string& subcommand, const FlagRegistry& reg) {
  json cfg = reg.resolved();
  cfg["subcommand"] = subcommand;
  write_file(dir / "resolved_config.json", dump_json(cfg));
}

inline std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
  return value;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Command {
  CLI::App* app = nullptr;
  FlagRegistry registry;
  std::string config_file;
  std::uint64_t seed = 0;
  std::function<void(std::ostream&, std::ostream&)> run;
  virtual ~Command() = default;

  void bind_common() {
    app->add_option("--config", config_file, "JSON file whose keys mirror the flag names; flags override it");
    registry.option(app, "seed", seed, "Seed recorded in reports (and used by synth)");
  }
};

struct TokenizeCommand : Command {
  DatasetArgs data;
  TokenizerArgs tok;
  std::string output;
  std::string layout_out;

  explicit TokenizeCommand(CLI::App& root) {
    app = root.add_subcommand("tokenize", "Scale and quantize every window (context then horizon) to tokens");
    bind_common();
    data.bind(app, registry);
    tok.bind(app, registry);
    registry.option(app, "output", output, "Output JSONL, one record per window");
    registry.option(app, "layout-out", layout_out, "Optional path for the bin layout JSON");
    run = [this](std::ostream&, std::ostream& err) {
      const auto cfg = tok.resolve();
      const auto layout = cfg.layout();
      require(output, "--output");
      const auto ds = data.load(err);
      std::ostringstream out;
      std::string last_id;
      std::size_t window_index = 0;
      for (std::size_t i = 0; i < ds.windows.size(); ++i) {
        const auto& w = ds.windows[i];
        window_index = (i > 0 && w.series_id == last_id) ? window_index + 1 : 0;
        last_id = w.series_id;
        const auto tw = tokenize_window(layout, cfg.scaling, w);
        std::vector<Token> tokens = tw.context.tokens;
        tokens.insert(tokens.end(), tw.horizon.tokens.begin(), tw.horizon.tokens.end());
        json rec{{"series_id", w.series_id},
                 {"window_index", window_index},
                 {"n_context", w.context.size()},
                 {"tokens", tokens},
                 {"scaler", {{"a", tw.scaler.a()}, {"b", tw.scaler.b()}}},
                 {"clipped_low", tw.context.clipped_low + tw.horizon.clipped_low},
                 {"clipped_high", tw.context.clipped_high + tw.horizon.clipped_high}};
        out << rec.dump() << '\n';
      }
      write_file(output, out.str());
      if (!layout_out.empty()) write_file(layout_out, dump_json(json(layout)));
      write_resolved_config(parent_dir(output), "tokenize", registry);
    };
  }
};

struct DetokenizeCommand : Command {
  std::string input;
  TokenizerArgs tok;
  std::string layout_file;
  std::string output;

  explicit DetokenizeCommand(CLI::App& root) {
    app = root.add_subcommand("detokenize", "Map token records back to raw values (bin centers, inverse scaling)");
    bind_common();
    registry.option(app, "input", input, "Token JSONL written by `tokenize`");
    tok.bind(app, registry);
    registry.option(app, "layout", layout_file, "Bin layout JSON (overrides the tokenizer flags)");
    registry.option(app, "output", output, "Output JSONL {series_id, window_index, values[]}");
    run = [this](std::ostream&, std::ostream&) {
      const auto cfg = tok.resolve();
      std::optional<BinLayout> layout;
      if (!layout_file.empty()) {
        std::ifstream lf(layout_file);
        if (!lf) throw InputError("cannot open " + layout_file);
        json lj;
        try {
          lj = json::parse(lf);
        } catch (const json::exception& e) {
          throw InputError(layout_file + ": " + e.what());
        }
        layout = layout_from_json(lj);
      } else {
        layout = cfg.layout();
      }
      require(input, "--input");
      require(output, "--output");
      std::ifstream in(input);
      if (!in) throw InputError("cannot open " + input);
      std::ostringstream out;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
          const auto rec = json::parse(line);
          const auto tokens = rec.at("tokens").get<std::vector<Token>>();
          const AffineScaler scaler(cfg.scaling, rec.at("scaler").at("a").get<double>(),
                                    rec.at("scaler").at("b").get<double>());
          for (Token t : tokens) {
            if (t < 1 || t > layout->size()) throw InputError("token out of range for this layout");
          }
          json result{{"series_id", rec.at("series_id")},
                      {"window_index", rec.at("window_index")},
                      {"values", scaler.invert(dequantize(*layout, tokens))}};
          out << result.dump() << '\n';
        } catch (const json::exception& e) {
          throw InputError(input + ":" + std::to_string(line_no) + ": " + e.what());
        }
      }
      write_file(output, out.str());
      write_resolved_config(parent_dir(output), "detokenize", registry);
    };
  }
};

struct BoundCommand : Command {
  DatasetArgs data;
  TokenizerArgs tok;
  SearchArgs search;
  bool tune = false;
  std::string output;
  std::string trace;

  explicit BoundCommand(CLI::App& root) {
    app = root.add_subcommand("bound", "Perfect-predictor MASE lower bound for one tokenizer configuration");
    bind_common();
    data.bind(app, registry);
    tok.bind(app, registry);
    registry.flag(app, "--tune", "tune", tune, "Tune the width instead of using --width");
    search.bind(app, registry);
    registry.option(app, "output", output, "Output JSON (OracleResult)");
    registry.option(app, "trace", trace, "Optional width,mean_mase search-trace CSV (with --tune)");
    run = [this](std::ostream& out, std::ostream& err) {
      const auto cfg = tok.resolve();
      if (tune) search.spec.validate();
      require(output, "--output");
      const auto ds = data.load(err);
      OracleResult result;
      if (tune) {
        const auto tuned = tune_width(cfg.scaling, cfg.binning, cfg.vocab_size, ds, search.spec);
        result = tuned.result;
        if (!trace.empty()) write_file(trace, render([&](std::ostream& o) { write_trace_csv(o, tuned.trace); }));
      } else {
        result = oracle_evaluate(cfg, ds);
      }
      write_file(output, dump_json(json(result)));
      write_resolved_config(parent_dir(output), "bound", registry);
      out << "mean_mase " << format_double(result.mean_mase) << " width " << format_double(result.config.width)
          << '\n';
    };
  }
};

struct TuneCommand : Command {
  DatasetArgs data;
  TokenizerArgs tok;
  SearchArgs search;
  std::string output;
  std::string trace;

  explicit TuneCommand(CLI::App& root) {
    app = root.add_subcommand("tune", "Search the layout width that minimizes the oracle MASE");
    bind_common();
    data.bind(app, registry);
    tok.bind(app, registry, /*with_width=*/false);
    search.bind(app, registry);
    registry.option(app, "output", output, "Output JSON {width, result}");
    registry.option(app, "trace", trace, "width,mean_mase search-trace CSV (default: <output dir>/trace.csv)");
    run = [this](std::ostream& out, std::ostream& err) {
      tok.width = search.spec.w_lo;
      const auto cfg = tok.resolve();
      search.spec.validate();
      require(output, "--output");
      const auto ds = data.load(err);
      const auto tuned = tune_width(cfg.scaling, cfg.binning, cfg.vocab_size, ds, search.spec);
      write_file(output, dump_json(json{{"width", tuned.width}, {"result", tuned.result}}));
      const fs::path trace_path = trace.empty() ? parent_dir(output) / "trace.csv" : fs::path(trace);
      write_file(trace_path, render([&](std::ostream& o) { write_trace_csv(o, tuned.trace); }));
      write_resolved_config(parent_dir(output), "tune", registry);
      out << "width " << format_double(tuned.width) << " mean_mase " << format_double(tuned.result.mean_mase)
          << '\n';
    };
  }
};

inline void write_report_files(const fs::path& dir, const SweepReport& report) {
  write_file(dir / "report.json", dump_json(json(report)));
  write_file(dir / "bounds.csv", render([&](std::ostream& o) { write_bounds_csv(o, report); }));
  for (const auto& e : report.entries) {
    write_file(dir / ("utilization_" + e.config.key() + ".csv"),
               render([&](std::ostream& o) { write_histogram_csv(o, e.utilization); }));
  }
  write_file(dir / "powerlaw.csv", render([&](std::ostream& o) { write_powerlaw_csv(o, report); }));
  write_file(dir / "correlations.csv", render([&](std::ostream& o) { write_correlations_csv(o, report.correlations); }));
}

struct SweepCommand : Command {
  DatasetArgs data;
  std::vector<std::string> scalings{"mean", "minmax", "normal"};
  std::vector<std::string> binnings{"uniform", "normal", "expdecay"};
  std::vector<std::size_t> vocab{512, 1024, 4096};
  bool tune = true;
  double width = 10.0;
  SearchArgs search;
  std::string output_dir;

  explicit SweepCommand(CLI::App& root) {
    app = root.add_subcommand("sweep", "Oracle bounds over the scaling x binning x vocabulary grid");
    bind_common();
    data.bind(app, registry);
    registry.list(app, "scalings", scalings, "Comma-separated scaling schemes");
    registry.list(app, "binnings", binnings, "Comma-separated binning schemes");
    registry.list(app, "vocab", vocab, "Comma-separated vocabulary sizes");
    registry.flag(app, "--tune,!--no-tune", "tune", tune, "Tune the width per cell (default on)");
    registry.option(app, "width", width, "Fixed width used with --no-tune");
    search.bind(app, registry);
    registry.option(app, "output-dir", output_dir, "Directory receiving report.json and the CSV files");
    run = [this](std::ostream& out, std::ostream& err) {
      SweepOptions opts;
      opts.scalings.clear();
      opts.binnings.clear();
      for (const auto& s : scalings) opts.scalings.push_back(parse_scaling_scheme(s));
      for (const auto& b : binnings) opts.binnings.push_back(parse_binning_scheme(b));
      opts.vocab_sizes = vocab;
      for (auto b : vocab) {
        if (b < 2) throw ConfigError("vocabulary sizes must be at least 2");
      }
      if (opts.scalings.empty() || opts.binnings.empty() || opts.vocab_sizes.empty()) {
        throw ConfigError("sweep grid must be non-empty");
      }
      opts.tune = tune;
      opts.fixed_width = width;
      if (!tune && !(width > 0.0)) throw ConfigError("--width must be positive");
      opts.search = search.spec;
      if (tune) opts.search.validate();
      opts.seed = seed;
      require(output_dir, "--output-dir");
      const auto ds = data.load(err);
      const auto report = run_sweep(ds, opts);
      write_report_files(output_dir, report);
      write_resolved_config(output_dir, "sweep", registry);
      out << report.entries.size() << " cells written to " << output_dir << '\n';
    };
  }
};

struct UtilizationCommand : Command {
  DatasetArgs data;
  TokenizerArgs tok;
  std::string output;
  std::string histogram;

  explicit UtilizationCommand(CLI::App& root) {
    app = root.add_subcommand("utilization", "Token-space utilization (Cramer's V, entropy) of a tokenized dataset");
    bind_common();
    data.bind(app, registry);
    tok.bind(app, registry);
    registry.option(app, "output", output, "Output JSON (UtilizationStats)");
    registry.option(app, "histogram", histogram, "Optional token,count CSV");
    run = [this](std::ostream& out, std::ostream& err) {
      const auto cfg = tok.resolve();
      cfg.layout();
      require(output, "--output");
      const auto ds = data.load(err);
      const auto stats = dataset_utilization(cfg, ds);
      write_file(output, dump_json(json(stats)));
      if (!histogram.empty()) write_file(histogram, render([&](std::ostream& o) { write_histogram_csv(o, stats); }));
      write_resolved_config(parent_dir(output), "utilization", registry);
      out << "cramers_v " << format_double(stats.cramers_v) << " normalized_entropy "
          << format_double(stats.normalized_entropy) << '\n';
    };
  }
};

struct CorrelateCommand : Command {
  std::string report_file;
  std::string output;

  explicit CorrelateCommand(CLI::App& root) {
    app = root.add_subcommand("correlate", "Spearman correlation of utilization vs oracle MASE from a sweep report");
    bind_common();
    registry.option(app, "report", report_file, "report.json written by `sweep`");
    registry.option(app, "output", output, "Output correlations CSV");
    run = [this](std::ostream& out, std::ostream&) {
      require(report_file, "--report");
      require(output, "--output");
      std::ifstream in(report_file);
      if (!in) throw InputError("cannot open " + report_file);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw InputError(report_file + ": " + e.what());
      }
      const auto rows = correlation_table(report_from_json(j));
      write_file(output, render([&](std::ostream& o) { write_correlations_csv(o, rows); }));
      write_resolved_config(parent_dir(output), "correlate", registry);
      for (const auto& r : rows) {
        out << r.row.label << " rho " << (r.row.rho ? format_double(*r.row.rho) : "undefined") << " p "
            << (r.row.p_value ? format_double(*r.row.p_value) : "undefined") << '\n';
      }
    };
  }
};

struct SynthCommand : Command {
  std::string kind = "gaussian_ar1";
  std::size_t n = 200;
  std::size_t length = 256;
  std::string output;

  explicit SynthCommand(CLI::App& root) {
    app = root.add_subcommand("synth", "Write a deterministic synthetic dataset as CSV");
    bind_common();
    registry.option(app, "kind", kind, "gaussian_ar1 | heavy_tailed | seasonal_sine");
    registry.option(app, "n", n, "Number of series");
    registry.option(app, "length", length, "Points per series (>= 32)");
    registry.option(app, "output", output, "Output CSV");
    run = [this](std::ostream&, std::ostream&) {
      const auto k = parse_synth_kind(kind);
      if (n == 0) throw ConfigError("--n must be positive");
      if (length < synthetic_min_length) throw ConfigError("--length must be at least 32");
      require(output, "--output");
      const auto series = generate_series(k, n, length, seed);
      write_file(output, render([&](std::ostream& o) { write_series_csv(o, series); }));
      write_resolved_config(parent_dir(output), "synth", registry);
    };
  }
};

inline json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

/// Entry point. Exit codes: 0 ok, 1 input/IO error, 2 configuration error,
/// 3 internal invariant violation.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App root{"tsquant: time series tokenizer bounds and token-space analysis", "tsquant"};
  root.require_subcommand(1);
  root.set_version_flag("--version", std::string(version));

  std::vector<std::unique_ptr<Command>> commands;
  commands.push_back(std::make_unique<TokenizeCommand>(root));
  commands.push_back(std::make_unique<DetokenizeCommand>(root));
  commands.push_back(std::make_unique<BoundCommand>(root));
  commands.push_back(std::make_unique<TuneCommand>(root));
  commands.push_back(std::make_unique<SweepCommand>(root));
  commands.push_back(std::make_unique<UtilizationCommand>(root));
  commands.push_back(std::make_unique<CorrelateCommand>(root));
  commands.push_back(std::make_unique<SynthCommand>(root));

  try {
    root.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << root.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << root.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << version << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    // A subcommand's --help is reported through the same channel.
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      for (const auto& c : commands) {
        if (c->app->parsed()) {
          out << c->app->help();
          return exit_ok;
        }
      }
      out << root.help();
      return exit_ok;
    }
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  for (auto& c : commands) {
    if (!c->app->parsed()) continue;
    try {
      if (!c->config_file.empty()) c->registry.merge(read_config_file(c->config_file));
      c->run(out, err);
      return exit_ok;
    } catch (const ConfigError& e) {
      err << "configuration error: " << e.what() << '\n';
      return exit_config;
    } catch (const InputError& e) {
      err << "input error: " << e.what() << '\n';
      return exit_input;
    } catch (const fs::filesystem_error& e) {
      err << "input error: " << e.what() << '\n';
      return exit_input;
    } catch (const std::exception& e) {
      err << "internal error: " << e.what() << '\n';
      return exit_internal;
    }
  }
  err << "error: no subcommand\n";
  return exit_config;
}

}  // namespace tsquant::cli
