#pragma once

// Scenario files: flat key = value text with [section] headers.
//
//   [topology]  kind = element | parallel | series
//               series_sign = source_voltage | inductor_voltage
//   [params]    L, h (always); R, C (circuits)
//   [initial]   phi, Q, I (optional; selects the initial branch)
//   [waveform]  kind, horizon, and the fields of that kind
//   [solver]    dt, ev_tol, v_tol, exact, regularization (number or "off")
//   [output]    csv, phase_svg, energy_svg
//
// '#' and ';' start comments. Every error names the line and the key.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bph/backlash.hpp"
#include "bph/ph_structure.hpp"
#include "bph/simulate.hpp"
#include "bph/waveform.hpp"

namespace bph {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::string field, const std::string& what)
      : std::runtime_error(what), line_(line), field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

struct OutputPaths {
  std::string csv = "trajectory.csv";
  std::optional<std::string> phase_svg;
  std::optional<std::string> energy_svg;
};

struct ScenarioConfig {
  Topology topology = Topology::element;
  SeriesSign series_sign = SeriesSign::source_voltage;
  CircuitParams params;
  CircuitState initial;
  std::optional<double> initial_current;
  WaveformSpec waveform;
  SolverOptions solver;
  OutputPaths output;

  PHStructure structure() const {
    switch (topology) {
      case Topology::element: return build_backlash_element(params.backlash);
      case Topology::parallel: return build_parallel(params);
      case Topology::series: return build_series(params, series_sign);
    }
    throw std::logic_error("unknown topology");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

struct Section {
  std::size_t line = 0;
  std::map<std::string, Entry> entries;
};

/// Raw sections of a config file, with lookups that mark keys as consumed.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in) {
    KeyValueFile f;
    std::string raw;
    std::string current;
    std::size_t n = 0;
    while (std::getline(in, raw)) {
      ++n;
      std::string_view line = raw;
      if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(n, "", "line " + std::to_string(n) + ": unterminated section header");
        current = std::string(trim(line.substr(1, line.size() - 2)));
        if (f.sections_.count(current)) {
          throw ConfigError(n, current, "line " + std::to_string(n) + ": duplicate section [" + current + "]");
        }
        f.sections_[current].line = n;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(n, std::string(line), "line " + std::to_string(n) + ": expected key = value");
      }
      if (current.empty()) {
        throw ConfigError(n, std::string(trim(line.substr(0, eq))),
                          "line " + std::to_string(n) + ": key outside of any [section]");
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) throw ConfigError(n, "", "line " + std::to_string(n) + ": empty key");
      auto& sec = f.sections_[current];
      if (sec.entries.count(key)) {
        throw ConfigError(n, key, "line " + std::to_string(n) + ": duplicate key '" + key + "' in [" + current + "]");
      }
      sec.entries[key] = Entry{value, n, false};
    }
    f.last_line_ = n;
    return f;
  }

  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }

  const Entry* find(const std::string& sec, const std::string& key) {
    auto s = sections_.find(sec);
    if (s == sections_.end()) return nullptr;
    auto e = s->second.entries.find(key);
    if (e == s->second.entries.end()) return nullptr;
    e->second.used = true;
    return &e->second;
  }

  const Entry& require(const std::string& sec, const std::string& key) {
    if (const Entry* e = find(sec, key)) return *e;
    auto s = sections_.find(sec);
    const std::size_t line = s == sections_.end() ? last_line_ : s->second.line;
    const std::string where = s == sections_.end() ? "missing section [" + sec + "]" : "in [" + sec + "]";
    throw ConfigError(line, key, "line " + std::to_string(line) + ": missing required key '" + key + "' (" + where + ")");
  }

  static double to_double(const std::string& sec, const std::string& key, const Entry& e) {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    if (!e.value.empty() && *b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) {
      throw ConfigError(e.line, key,
                        "line " + std::to_string(e.line) + ": [" + sec + "] " + key + " = '" + e.value +
                            "' is not a finite number");
    }
    return v;
  }

  double number(const std::string& sec, const std::string& key) { return to_double(sec, key, require(sec, key)); }

  double number_or(const std::string& sec, const std::string& key, double fallback) {
    const Entry* e = find(sec, key);
    return e ? to_double(sec, key, *e) : fallback;
  }

  std::optional<double> optional_number(const std::string& sec, const std::string& key) {
    const Entry* e = find(sec, key);
    if (!e) return std::nullopt;
    return to_double(sec, key, *e);
  }

  std::vector<double> number_list(const std::string& sec, const std::string& key) {
    const Entry& e = require(sec, key);
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      Entry piece{std::string(trim(item)), e.line, true};
      out.push_back(to_double(sec, key, piece));
    }
    return out;
  }

  std::optional<std::string> text(const std::string& sec, const std::string& key) {
    const Entry* e = find(sec, key);
    if (!e) return std::nullopt;
    return e->value;
  }

  bool boolean_or(const std::string& sec, const std::string& key, bool fallback) {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    throw ConfigError(e->line, key,
                      "line " + std::to_string(e->line) + ": [" + sec + "] " + key + " must be true or false");
  }

  std::uint64_t unsigned_or(const std::string& sec, const std::string& key, std::uint64_t fallback) {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc() || p != e->value.data() + e->value.size()) {
      throw ConfigError(e->line, key,
                        "line " + std::to_string(e->line) + ": [" + sec + "] " + key + " must be an unsigned integer");
    }
    return v;
  }

  /// Rejects keys that nothing consumed (typos would otherwise pass silently).
  void reject_unused(const std::set<std::string>& ignored_sections = {}) const {
    for (const auto& [name, sec] : sections_) {
      if (ignored_sections.count(name)) continue;
      for (const auto& [key, e] : sec.entries) {
        if (!e.used) {
          throw ConfigError(e.line, key,
                            "line " + std::to_string(e.line) + ": unknown key '" + key + "' in [" + name + "]");
        }
      }
    }
  }

  /// Line of a consumed key, for attributing validation failures.
  std::size_t line_of(const std::string& sec, const std::string& key) const {
    auto s = sections_.find(sec);
    if (s == sections_.end()) return last_line_;
    auto e = s->second.entries.find(key);
    return e == s->second.entries.end() ? s->second.line : e->second.line;
  }

 private:
  std::map<std::string, Section> sections_;
  std::size_t last_line_ = 0;
};

template <class F>
void attributed(KeyValueFile& f, const std::string& sec, const std::string& key, F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    const std::size_t line = f.line_of(sec, key);
    throw ConfigError(line, key, "line " + std::to_string(line) + ": [" + sec + "] " + key + ": " + e.what());
  }
}

inline WaveformKind parse_waveform_kind(const Entry& e) {
  if (e.value == "constant") return WaveformKind::constant;
  if (e.value == "sine") return WaveformKind::sine;
  if (e.value == "square") return WaveformKind::square;
  if (e.value == "piecewise_linear" || e.value == "pwl") return WaveformKind::piecewise_linear;
  if (e.value == "prbs") return WaveformKind::prbs;
  throw ConfigError(e.line, "kind",
                    "line " + std::to_string(e.line) + ": [waveform] kind '" + e.value +
                        "' is not one of constant, sine, square, piecewise_linear, prbs");
}

}  // namespace detail

inline ScenarioConfig parse_config(std::istream& in) {
  using detail::Entry;
  auto f = detail::KeyValueFile::parse(in);
  ScenarioConfig cfg;

  const Entry& topo = f.require("topology", "kind");
  if (topo.value == "element") {
    cfg.topology = Topology::element;
  } else if (topo.value == "parallel") {
    cfg.topology = Topology::parallel;
  } else if (topo.value == "series") {
    cfg.topology = Topology::series;
  } else {
    throw ConfigError(topo.line, "kind",
                      "line " + std::to_string(topo.line) + ": [topology] kind '" + topo.value +
                          "' is not one of element, parallel, series");
  }
  if (const Entry* sgn = f.find("topology", "series_sign")) {
    if (sgn->value == "source_voltage") {
      cfg.series_sign = SeriesSign::source_voltage;
    } else if (sgn->value == "inductor_voltage") {
      cfg.series_sign = SeriesSign::inductor_voltage;
    } else {
      throw ConfigError(sgn->line, "series_sign",
                        "line " + std::to_string(sgn->line) +
                            ": [topology] series_sign must be source_voltage or inductor_voltage");
    }
  }

  cfg.params.backlash.L = f.number("params", "L");
  cfg.params.backlash.h = f.number("params", "h");
  detail::attributed(f, "params", "L", [&] { cfg.params.backlash.validate(); });
  if (cfg.topology != Topology::element) {
    cfg.params.R = f.number("params", "R");
    cfg.params.C = f.number("params", "C");
    detail::attributed(f, "params", "R", [&] { cfg.params.validate(); });
  } else {
    f.find("params", "R");  // accepted and ignored
    f.find("params", "C");
  }

  cfg.initial.phi = f.number_or("initial", "phi", 0.0);
  const double Q0 = f.number_or("initial", "Q", 0.0);
  if (cfg.topology != Topology::element) cfg.initial.Q = Q0;
  cfg.initial_current = f.optional_number("initial", "I");
  detail::attributed(f, "initial", "I", [&] {
    cfg.initial.s = initial_selection(cfg.initial.phi, cfg.initial_current, cfg.params.backlash);
  });

  auto& w = cfg.waveform;
  w.kind = detail::parse_waveform_kind(f.require("waveform", "kind"));
  w.horizon = f.number("waveform", "horizon");
  switch (w.kind) {
    case WaveformKind::constant: w.level = f.number("waveform", "level"); break;
    case WaveformKind::sine:
    case WaveformKind::square:
      w.amplitude = f.number("waveform", "amplitude");
      w.frequency = f.number("waveform", "frequency");
      w.phase = f.number_or("waveform", "phase", 0.0);
      w.offset = f.number_or("waveform", "offset", 0.0);
      break;
    case WaveformKind::prbs:
      w.amplitude = f.number("waveform", "amplitude");
      w.frequency = f.number("waveform", "frequency");
      w.offset = f.number_or("waveform", "offset", 0.0);
      w.seed = f.unsigned_or("waveform", "seed", 0);
      break;
    case WaveformKind::piecewise_linear:
      w.times = f.number_list("waveform", "times");
      w.values = f.number_list("waveform", "values");
      break;
  }
  detail::attributed(f, "waveform", "kind", [&] { w.validate(); });

  auto& s = cfg.solver;
  s.dt = f.number_or("solver", "dt", s.dt);
  s.ev_tol = f.number_or("solver", "ev_tol", s.ev_tol);
  s.v_tol = f.number_or("solver", "v_tol", s.v_tol);
  s.exact = f.boolean_or("solver", "exact", s.exact);
  if (auto reg = f.text("solver", "regularization"); reg && *reg != "off") {
    s.regularization = f.number("solver", "regularization");
  }
  detail::attributed(f, "solver", "dt", [&] { s.validate(); });

  if (auto v = f.text("output", "csv")) cfg.output.csv = *v;
  cfg.output.phase_svg = f.text("output", "phase_svg");
  cfg.output.energy_svg = f.text("output", "energy_svg");

  f.reject_unused();
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace bph
