// Run configuration parsing, CSV tables and SVG plots. Frequencies enter as
// linear Hz and are converted to rad/s here, once.

#pragma once

#include "resetpol/table.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#ifndef RESETPOL_VERSION
#define RESETPOL_VERSION "0.0.0"
#endif

namespace resetpol {

inline constexpr const char* kVersion = RESETPOL_VERSION;

/// Bad configuration text. `line()` is 1-based, 0 when the problem is a key
/// that never appears.
class ConfigError : public PreconditionError {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : PreconditionError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration

struct SweepBlock {
  std::optional<double> start_freq, stop_freq;  // rad/s, from sweep.start_hz / stop_hz
  std::optional<double> start_time, stop_time;  // s, from sweep.start_s / stop_s
  std::size_t steps = 201;
  ChannelChoice channel = ChannelChoice::automatic;
};

struct ConvergeBlock {
  std::size_t cycles = 2000;
};

struct FitBlock {
  std::string spectrum_csv;
  int k = 1;
  bool larmor_offset = false;
  std::optional<double> noise_sigma;
  int max_iterations = 60;
};

struct ScenarioBlock {
  std::vector<double> t2e_values{100e-6, 500e-6};  // s
  double probe = 250e-6;                            // s
  double detuning_span = kTwoPi * 10e3;             // rad/s, full width of the delta' scan
  std::size_t detuning_steps = 201;
  double evolution = 320e-3;  // s
  bool literal = false;
  double horizon = 200e-3;  // s
  bool retune = true;
};

struct OutputBlock {
  std::string csv;
  std::string plot;
};

struct RunConfig {
  SystemSpec system;
  DriveSpec drive;
  SweepBlock sweep;
  ConvergeBlock converge;
  FitBlock fit;
  ScenarioBlock scenario;
  OutputBlock output;
  /// Every known key with the text it resolved to (given or default), in schema order.
  std::vector<std::pair<std::string, std::string>> resolved;
};

namespace detail {

enum class ValueKind { number, optional_time, count, flag, word, text, list };

struct KeySpec {
  std::string_view name;
  ValueKind kind;
  std::string_view fallback;  // empty: no default
};

// clang-format off
inline constexpr KeySpec kGlobalKeys[] = {
    {"drive.rabi_hz", ValueKind::number, ""},
    {"drive.t_reset_s", ValueKind::number, ""},
    {"drive.t2e_s", ValueKind::optional_time, "inf"},
    {"drive.t2e_frame", ValueKind::word, "lab"},
    {"system.gamma_b0_hz", ValueKind::number, ""},
    {"sweep.start_hz", ValueKind::number, ""},
    {"sweep.stop_hz", ValueKind::number, ""},
    {"sweep.start_s", ValueKind::number, ""},
    {"sweep.stop_s", ValueKind::number, ""},
    {"sweep.steps", ValueKind::count, "201"},
    {"sweep.channel", ValueKind::word, "automatic"},
    {"converge.cycles", ValueKind::count, "2000"},
    {"fit.spectrum_csv", ValueKind::text, ""},
    {"fit.k", ValueKind::count, "1"},
    {"fit.larmor_offset", ValueKind::flag, "false"},
    {"fit.noise_sigma", ValueKind::number, ""},
    {"fit.max_iterations", ValueKind::count, "60"},
    {"scenario.t2e_values_s", ValueKind::list, "100e-6, 500e-6"},
    {"scenario.probe_s", ValueKind::number, "250e-6"},
    {"scenario.detuning_span_hz", ValueKind::number, "10000"},
    {"scenario.detuning_steps", ValueKind::count, "201"},
    {"scenario.evolution_s", ValueKind::number, "0.32"},
    {"scenario.literal", ValueKind::flag, "false"},
    {"scenario.horizon_s", ValueKind::number, "0.2"},
    {"scenario.retune", ValueKind::flag, "true"},
    {"output.csv", ValueKind::text, ""},
    {"output.plot", ValueKind::text, ""},
};

inline constexpr KeySpec kNucleusKeys[] = {
    {"a_perp_hz", ValueKind::number, ""},
    {"a_par_hz", ValueKind::number, ""},
    {"larmor_hz", ValueKind::number, ""},
    {"t2n_s", ValueKind::optional_time, "inf"},
};
// clang-format on

struct RawValue {
  std::string text;
  std::size_t line = 0;
};

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Canonical section for a nucleus key: "nucleus" is an alias of "nucleus1".
inline std::optional<std::string> nucleus_section(std::string_view section) {
  if (section == "nucleus" || section == "nucleus1") return "nucleus1";
  for (std::size_t i = 2; i <= kMaxNuclei; ++i) {
    if (section == "nucleus" + std::to_string(i)) return std::string(section);
  }
  return std::nullopt;
}

inline const KeySpec* find_key(const std::string& canonical) {
  for (const auto& k : kGlobalKeys) {
    if (k.name == canonical) return &k;
  }
  const auto dot = canonical.find('.');
  if (dot != std::string::npos && nucleus_section(canonical.substr(0, dot))) {
    const auto key = std::string_view(canonical).substr(dot + 1);
    for (const auto& k : kNucleusKeys) {
      if (k.name == key) return &k;
    }
  }
  return nullptr;
}

class ValueReader {
 public:
  explicit ValueReader(std::map<std::string, RawValue> raw) : raw_(std::move(raw)) {}

  [[nodiscard]] bool has(const std::string& key) const { return raw_.count(key) != 0; }

  [[nodiscard]] std::size_t line(const std::string& key) const {
    const auto it = raw_.find(key);
    return it == raw_.end() ? 0 : it->second.line;
  }

  [[nodiscard]] const std::string& text(const std::string& key) const { return raw_.at(key).text; }

  [[nodiscard]] double number(const std::string& key, bool allow_inf = false) const {
    const auto& v = raw_.at(key);
    const char* begin = v.text.c_str();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE || std::isnan(x)) {
      throw ConfigError(v.line, key + ": '" + v.text + "' is not a number");
    }
    if (std::isinf(x) && !(allow_inf && x > 0.0)) {
      throw ConfigError(v.line, key + ": value must be finite");
    }
    return x;
  }

  [[nodiscard]] std::optional<double> optional_time(const std::string& key) const {
    const double x = number(key, true);
    if (!(x > 0.0)) throw ConfigError(line(key), key + ": must be > 0 (or inf)");
    return std::isinf(x) ? std::nullopt : std::optional(x);
  }

  [[nodiscard]] double at_least(const std::string& key, double lo, bool strict) const {
    const double x = number(key);
    if (strict ? !(x > lo) : !(x >= lo)) {
      throw ConfigError(line(key), key + ": must be " + (strict ? "> " : ">= ") + fmt(lo));
    }
    return x;
  }

  [[nodiscard]] std::size_t count(const std::string& key, std::size_t lo) const {
    const double x = number(key);
    if (x != std::floor(x) || x < static_cast<double>(lo) || x > 1e9) {
      throw ConfigError(line(key), key + ": must be an integer >= " + std::to_string(lo));
    }
    return static_cast<std::size_t>(x);
  }

  [[nodiscard]] bool flag(const std::string& key) const {
    const auto& t = text(key);
    if (t == "true") return true;
    if (t == "false") return false;
    throw ConfigError(line(key), key + ": expected true or false, got '" + t + "'");
  }

  [[nodiscard]] std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(text(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const ValueReader one(std::map<std::string, RawValue>{{key, RawValue{trim(item), line(key)}}});
      out.push_back(one.number(key, true));
      if (!(out.back() > 0.0)) throw ConfigError(line(key), key + ": entries must be > 0");
    }
    if (out.empty()) throw ConfigError(line(key), key + ": empty list");
    return out;
  }

  static std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
  }

 private:
  std::map<std::string, RawValue> raw_;
};

}  // namespace detail

/// Parses the flat `section.key = value` format. `#` starts a comment.
/// Unknown keys, repeated keys, malformed and out-of-range values are
/// rejected with the offending line number.
inline RunConfig parse_config(std::string_view text) {
  std::map<std::string, detail::RawValue> raw;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected 'section.key = value'");
    std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
      throw ConfigError(line_no, "key '" + key + "' must have the form section.key");
    }
    if (const auto sec = detail::nucleus_section(key.substr(0, dot))) key = *sec + key.substr(dot);
    if (!detail::find_key(key)) throw ConfigError(line_no, "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(line_no, key + ": missing value");
    if (raw.count(key)) {
      throw ConfigError(line_no, key + ": already set on line " + std::to_string(raw[key].line));
    }
    raw[key] = {value, line_no};
  }

  // Defaults fill in before typed reading, so both paths share validation.
  RunConfig cfg;
  auto resolve = [&](const std::string& key, std::string_view fallback) {
    if (!raw.count(key) && !fallback.empty()) raw[key] = {std::string(fallback), 0};
    if (raw.count(key)) cfg.resolved.emplace_back(key, raw[key].text);
  };
  std::size_t n_nuclei = 0;
  for (std::size_t i = 1; i <= kMaxNuclei; ++i) {
    const std::string sec = "nucleus" + std::to_string(i);
    const bool present = std::any_of(raw.begin(), raw.end(), [&](const auto& kv) {
      return kv.first.rfind(sec + ".", 0) == 0;
    });
    if (!present) continue;
    if (n_nuclei + 1 != i) {
      throw ConfigError(raw.lower_bound(sec)->second.line,
                        sec + " given without nucleus" + std::to_string(i - 1));
    }
    n_nuclei = i;
  }
  for (const auto& k : detail::kGlobalKeys) resolve(std::string(k.name), k.fallback);
  for (std::size_t i = 1; i <= std::max<std::size_t>(n_nuclei, 1); ++i) {
    for (const auto& k : detail::kNucleusKeys) {
      resolve("nucleus" + std::to_string(i) + "." + std::string(k.name), k.fallback);
    }
  }

  const detail::ValueReader v(raw);
  // Syntax of every given value first, in file order, so a malformed line is
  // reported even when a required key is also missing.
  std::vector<std::pair<std::size_t, std::string>> given;
  for (const auto& [key, rv] : raw) {
    if (rv.line) given.emplace_back(rv.line, key);
  }
  std::sort(given.begin(), given.end());
  for (const auto& [line, key] : given) {
    switch (detail::find_key(key)->kind) {
      case detail::ValueKind::number:
      case detail::ValueKind::count:
        (void)v.number(key);
        break;
      case detail::ValueKind::optional_time:
        (void)v.optional_time(key);
        break;
      case detail::ValueKind::flag:
        (void)v.flag(key);
        break;
      case detail::ValueKind::list:
        (void)v.list(key);
        break;
      case detail::ValueKind::word:
      case detail::ValueKind::text:
        break;
    }
  }
  auto require = [&](const std::string& key) {
    if (!v.has(key)) throw ConfigError(0, "missing required key " + key);
  };
  require("drive.rabi_hz");
  require("drive.t_reset_s");
  require("nucleus1.a_perp_hz");
  require("nucleus1.a_par_hz");

  cfg.drive.omega = kTwoPi * v.at_least("drive.rabi_hz", 0.0, false);
  cfg.drive.t_reset = v.at_least("drive.t_reset_s", 0.0, true);
  cfg.drive.t2e = v.optional_time("drive.t2e_s");
  const auto& frame = v.text("drive.t2e_frame");
  if (frame == "lab") {
    cfg.drive.t2e_frame = DephasingFrame::lab;
  } else if (frame == "dressed") {
    cfg.drive.t2e_frame = DephasingFrame::dressed;
  } else {
    throw ConfigError(v.line("drive.t2e_frame"), "drive.t2e_frame: expected lab or dressed");
  }

  if (v.has("system.gamma_b0_hz")) cfg.system.gamma_b0 = kTwoPi * v.number("system.gamma_b0_hz");
  for (std::size_t i = 1; i <= n_nuclei; ++i) {
    const std::string sec = "nucleus" + std::to_string(i) + ".";
    require(sec + "a_perp_hz");
    require(sec + "a_par_hz");
    if (!v.has(sec + "larmor_hz") && !v.has("system.gamma_b0_hz")) {
      throw ConfigError(0, "missing required key " + sec + "larmor_hz (or system.gamma_b0_hz)");
    }
    NucleusSpec n;
    n.a_perp = kTwoPi * v.at_least(sec + "a_perp_hz", 0.0, false);
    n.a_par = kTwoPi * v.number(sec + "a_par_hz");
    n.t2n = v.optional_time(sec + "t2n_s");
    if (v.has(sec + "larmor_hz")) n.larmor_override = kTwoPi * v.at_least(sec + "larmor_hz", 0.0, false);
    cfg.system.nuclei.push_back(n);
  }

  auto& sw = cfg.sweep;
  if (v.has("sweep.start_hz")) sw.start_freq = kTwoPi * v.at_least("sweep.start_hz", 0.0, false);
  if (v.has("sweep.stop_hz")) sw.stop_freq = kTwoPi * v.at_least("sweep.stop_hz", 0.0, false);
  if (v.has("sweep.start_s")) sw.start_time = v.at_least("sweep.start_s", 0.0, true);
  if (v.has("sweep.stop_s")) sw.stop_time = v.at_least("sweep.stop_s", 0.0, true);
  if (sw.start_freq && sw.stop_freq && !(*sw.start_freq < *sw.stop_freq)) {
    throw ConfigError(v.line("sweep.stop_hz"), "sweep.stop_hz must exceed sweep.start_hz");
  }
  if (sw.start_time && sw.stop_time && !(*sw.start_time < *sw.stop_time)) {
    throw ConfigError(v.line("sweep.stop_s"), "sweep.stop_s must exceed sweep.start_s");
  }
  sw.steps = v.count("sweep.steps", 2);
  const auto& ch = v.text("sweep.channel");
  if (ch == "automatic") {
    sw.channel = ChannelChoice::automatic;
  } else if (ch == "unitary") {
    sw.channel = ChannelChoice::unitary;
  } else if (ch == "lindblad") {
    sw.channel = ChannelChoice::lindblad;
  } else {
    throw ConfigError(v.line("sweep.channel"), "sweep.channel: expected automatic, unitary or lindblad");
  }

  cfg.converge.cycles = v.count("converge.cycles", 1);

  if (v.has("fit.spectrum_csv")) cfg.fit.spectrum_csv = v.text("fit.spectrum_csv");
  cfg.fit.k = static_cast<int>(v.count("fit.k", 1));
  cfg.fit.larmor_offset = v.flag("fit.larmor_offset");
  if (v.has("fit.noise_sigma")) cfg.fit.noise_sigma = v.at_least("fit.noise_sigma", 0.0, true);
  cfg.fit.max_iterations = static_cast<int>(v.count("fit.max_iterations", 1));

  auto& sc = cfg.scenario;
  sc.t2e_values = v.list("scenario.t2e_values_s");
  sc.probe = v.at_least("scenario.probe_s", 0.0, true);
  sc.detuning_span = kTwoPi * v.at_least("scenario.detuning_span_hz", 0.0, true);
  sc.detuning_steps = v.count("scenario.detuning_steps", 3);
  sc.evolution = v.at_least("scenario.evolution_s", 0.0, true);
  sc.literal = v.flag("scenario.literal");
  sc.horizon = v.at_least("scenario.horizon_s", 0.0, true);
  sc.retune = v.flag("scenario.retune");

  if (v.has("output.csv")) cfg.output.csv = v.text("output.csv");
  if (v.has("output.plot")) cfg.output.plot = v.text("output.plot");
  return cfg;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

/// Lines prefixed with "# ": tool version, command, worker count, the
/// (absent) random seed and the fully resolved configuration.
inline std::string provenance_header(const RunConfig& cfg, const std::string& command,
                                     unsigned threads) {
  std::string out = "# resetpol " + std::string(kVersion) + "\n";
  out += "# command = " + command + "\n";
  out += "# threads = " + std::to_string(threads) + "\n";
  out += "# seed = none (no stochastic steps)\n";
  for (const auto& [k, val] : cfg.resolved) out += "# " + k + " = " + val + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Header row then one row per table row; ',' separated, LF terminated,
/// 17 significant digits.
inline std::string csv_text(const Table& table) {
  std::string out;
  const bool labelled = !table.label_column.empty();
  if (labelled) out += table.label_column;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (labelled || c > 0) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.columns.size()) {
      throw PreconditionError("csv: row " + std::to_string(r) + " has the wrong width");
    }
    if (labelled) out += table.labels.at(r);
    for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
      if (labelled || c > 0) out += ',';
      out += format_double(table.rows[r][c]);
    }
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void emit_csv(const Table& table, const std::string& path) {
  write_text_file(path, csv_text(table));
}

/// Reads a CSV as written by csv_text. With labelled set, the first column is
/// text and lands in label_column/labels. Lines starting with '#' are skipped.
inline Table parse_csv(std::string_view text, bool labelled = false) {
  Table t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(detail::trim(f));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (header) {
      if (labelled) {
        if (fields.empty()) throw IoError("csv: empty header row");
        t.label_column = fields.front();
        fields.erase(fields.begin());
      }
      t.columns = fields;
      header = false;
      continue;
    }
    if (labelled && !fields.empty()) {
      t.labels.push_back(fields.front());
      fields.erase(fields.begin());
    }
    if (fields.size() != t.columns.size()) {
      throw IoError("csv line " + std::to_string(line_no) + ": expected " +
                    std::to_string(t.columns.size()) + " fields");
    }
    std::vector<double> row;
    for (const auto& field : fields) {
      char* end = nullptr;
      const double x = std::strtod(field.c_str(), &end);
      if (field.empty() || *end != '\0') {
        throw IoError("csv line " + std::to_string(line_no) + ": '" + field + "' is not a number");
      }
      row.push_back(x);
    }
    t.rows.push_back(std::move(row));
  }
  if (header) throw IoError("csv: no header row");
  return t;
}

inline Table read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

inline Table read_csv_labelled(const std::string& path) {
  return parse_csv(read_text_file(path), true);
}

inline std::size_t column_index(const Table& t, const std::string& name) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), name);
  if (it == t.columns.end()) throw IoError("csv: no column named '" + name + "'");
  return static_cast<std::size_t>(it - t.columns.begin());
}

// ---------------------------------------------------------------------------
// SVG plots

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;  // include units
  std::string y_label;
  std::vector<PlotSeries> series;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double x, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace detail

/// Single-panel line plot, one polyline per series. Output depends only on
/// the input, so identical input gives identical bytes.
inline std::string render_svg(const PlotSpec& plot) {
  if (plot.series.empty()) throw PreconditionError("plot: no series");
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size() || s.x.size() < 2) {
      throw PreconditionError("plot: series '" + s.label + "' needs >= 2 points of equal length");
    }
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double w = 640, h = 400, ml = 80, mr = 20, mt = 40, mb = 60;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };
  static constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                             "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  using detail::fixed;
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out += "<text x=\"" + fixed(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(plot.title) + "</text>\n";
  out += "<rect x=\"" + fixed(ml) + "\" y=\"" + fixed(mt) + "\" width=\"" + fixed(pw) +
         "\" height=\"" + fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    out += "<text x=\"" + fixed(sx(xv)) + "\" y=\"" + fixed(mt + ph + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + detail::tick(xv) + "</text>\n";
    out += "<text x=\"" + fixed(ml - 6) + "\" y=\"" + fixed(sy(yv) + 3) +
           "\" text-anchor=\"end\" font-size=\"10\">" + detail::tick(yv) + "</text>\n";
  }
  if (y0 < 0.0 && y1 > 0.0) {
    out += "<line x1=\"" + fixed(ml) + "\" y1=\"" + fixed(sy(0.0)) + "\" x2=\"" + fixed(ml + pw) +
           "\" y2=\"" + fixed(sy(0.0)) + "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  }
  out += "<text x=\"" + fixed(ml + pw / 2) + "\" y=\"" + fixed(h - 18) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + detail::xml_escape(plot.x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + fixed(mt + ph / 2) + "\" text-anchor=\"middle\" font-size=\"12\" " +
         "transform=\"rotate(-90 18 " + fixed(mt + ph / 2) + ")\">" +
         detail::xml_escape(plot.y_label) + "</text>\n";
  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    const auto& ser = plot.series[s];
    const char* colour = kColours[s % std::size(kColours)];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t k = 0; k < ser.x.size(); ++k) {
      if (!std::isfinite(ser.x[k]) || !std::isfinite(ser.y[k])) continue;
      if (!first) out += ' ';
      out += fixed(sx(ser.x[k])) + "," + fixed(sy(ser.y[k]));
      first = false;
    }
    out += "\"/>\n";
    const double ly = mt + 14 + 14 * static_cast<double>(s);
    out += "<text x=\"" + fixed(ml + pw - 6) + "\" y=\"" + fixed(ly) +
           "\" text-anchor=\"end\" font-size=\"10\" fill=\"" + colour + "\">" +
           detail::xml_escape(ser.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

inline void emit_plot(const PlotSpec& plot, const std::string& path) {
  write_text_file(path, render_svg(plot));
}

/// Plots `y_columns` of a table against `x_column`.
inline PlotSpec table_plot(const Table& table, const std::string& x_column,
                           const std::vector<std::string>& y_columns, std::string title,
                           std::string x_label, std::string y_label) {
  PlotSpec p{std::move(title), std::move(x_label), std::move(y_label), {}};
  const std::size_t xi = column_index(table, x_column);
  for (const auto& name : y_columns) {
    const std::size_t yi = column_index(table, name);
    PlotSeries s{name, {}, {}};
    for (const auto& r : table.rows) {
      s.x.push_back(r[xi]);
      s.y.push_back(r[yi]);
    }
    p.series.push_back(std::move(s));
  }
  return p;
}

inline PlotSpec spectrum_plot(const Spectrum& spectrum, std::string title = "steady-state polarisation") {
  const Table t = spectrum_table(spectrum);
  std::vector<std::string> ys;
  for (std::size_t i = 0; i + 1 < t.columns.size(); ++i) {
    const auto& c = t.columns[i + 1];
    if (c.rfind("Iz_", 0) == 0 || c.rfind("Ix_", 0) == 0) ys.push_back(c);
  }
  const bool is_time = spectrum.parameter == SweepParameter::reset_time;
  const char* x_label = is_time ? "reset period (s)"
                        : spectrum.parameter == SweepParameter::rabi ? "Rabi frequency (Hz)"
                                                                     : "Larmor frequency (Hz)";
  return table_plot(t, t.columns.front(), ys, std::move(title), x_label,
                    "<2I> (dimensionless)");
}

inline PlotSpec trajectory_plot(const Trajectory& traj, std::string title = "polarisation build-up") {
  const Table t = trajectory_table(traj);
  std::vector<std::string> ys;
  for (const auto& c : t.columns) {
    if (c.rfind("Iz_", 0) == 0 || c.rfind("Ix_", 0) == 0) ys.push_back(c);
  }
  return table_plot(t, "time_s", ys, std::move(title), "time (s)", "<2I> (dimensionless)");
}

}  // namespace resetpol
