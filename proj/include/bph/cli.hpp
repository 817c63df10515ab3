#pragma once

// Command-line front end. Exit codes: 0 ok, 1 a check failed, 2 bad
// configuration, suite name or lattice, 3 the solver failed.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "bph/config.hpp"
#include "bph/csv.hpp"
#include "bph/oracle.hpp"
#include "bph/simulate.hpp"
#include "bph/storage.hpp"
#include "bph/svg.hpp"
#include "bph/verify.hpp"

namespace bph::cli {

enum ExitCode : int { ok = 0, check_failed = 1, usage = 2, solver_failed = 3 };

struct GlobalFlags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

namespace detail {

inline std::string out_path(const GlobalFlags& g, const std::string& name) {
  std::filesystem::create_directories(g.out);
  return (std::filesystem::path(g.out) / name).string();
}

/// [params] L and h from a config file, for subcommands that need only those.
inline BacklashParams backlash_from_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot open config file '" + path + "'");
  auto f = bph::detail::KeyValueFile::parse(in);
  BacklashParams p{.L = f.number("params", "L"), .h = f.number("params", "h")};
  bph::detail::attributed(f, "params", "L", [&] { p.validate(); });
  return p;
}

}  // namespace detail

inline int cmd_simulate(const GlobalFlags& g, std::ostream& out, std::ostream& err) {
  if (g.config.empty()) {
    err << "simulate: --config is required\n";
    return usage;
  }
  ScenarioConfig cfg;
  try {
    cfg = load_config(g.config);
    if (g.seed) cfg.waveform.seed = *g.seed;
  } catch (const ConfigError& e) {
    err << g.config << ": " << e.what() << '\n';
    return usage;
  }
  const PHStructure sys = cfg.structure();
  TrajectoryRecord traj;
  try {
    traj = simulate(sys, cfg.initial, cfg.waveform, cfg.solver);
  } catch (const SimulationError& e) {
    err << "solver failure: " << e.what() << " (bracket [" << e.bracket().first << ", " << e.bracket().second << "])\n";
    return solver_failed;
  }
  const std::string csv = detail::out_path(g, cfg.output.csv);
  write_csv_file(csv, trajectory_table(traj));
  out << "wrote " << csv << " (" << traj.size() << " samples)\n";
  if (cfg.output.phase_svg) {
    const std::string p = detail::out_path(g, *cfg.output.phase_svg);
    write_svg_file(p, phase_plot(traj));
    out << "wrote " << p << '\n';
  }
  if (cfg.output.energy_svg) {
    const std::string p = detail::out_path(g, *cfg.output.energy_svg);
    write_svg_file(p, energy_plot(traj));
    out << "wrote " << p << '\n';
  }
  const auto& last = traj.back().ledger;
  out << "final H " << last.H << ", supplied " << last.supplied << ", resistive " << last.resistive << ", hysteretic "
      << last.hysteretic << ", residual " << last.residual << '\n';
  return ok;
}

struct ScanArgs {
  std::optional<double> L, h;
  double phi_min = -3.0, phi_max = 3.0;
  std::size_t points = 601;
  std::vector<double> gammas;  // empty: -h, -h/2, 0, h/2, h
  std::string csv = "storage_scan.csv";
  std::string svg = "storage_fan.svg";
};

inline int cmd_storage_scan(const GlobalFlags& g, const ScanArgs& a, std::ostream& out, std::ostream& err) {
  BacklashParams p{.L = 1.0, .h = 1.0};
  CsvTable table;
  try {
    if (!g.config.empty()) p = detail::backlash_from_config(g.config);
    if (a.L) p.L = *a.L;
    if (a.h) p.h = *a.h;
    p.validate();
    std::vector<double> gam = a.gammas;
    if (gam.empty()) gam = {-p.h, -p.h / 2.0, 0.0, p.h / 2.0, p.h};
    table = storage_scan_table(p, a.phi_min, a.phi_max, a.points, gam);
  } catch (const ConfigError& e) {
    err << g.config << ": " << e.what() << '\n';
    return usage;
  } catch (const std::invalid_argument& e) {
    err << "storage-scan: " << e.what() << '\n';
    return usage;
  }
  const std::string csv = detail::out_path(g, a.csv);
  write_csv_file(csv, table);
  const std::string svg = detail::out_path(g, a.svg);
  write_svg_file(svg, storage_fan_plot(table));
  out << "wrote " << csv << " and " << svg << " (" << table.rows.size() << " rows)\n";
  return ok;
}

struct OracleArgs {
  std::optional<double> L, h;
  std::vector<double> phi = {-3.0, -2.0, 0.0, 0.5, 2.0, 3.0};
  std::optional<double> step;  // default h/100
  int max_reversals = 5;
  std::optional<double> phi_min, phi_max;  // default -+6h
  std::string csv = "oracle_compare.csv";
};

/// Rows `phi,Sa_closed,Sa_dp,Sr_closed,Sr_dp,err_a,err_r`; errors are relative,
/// |dp - closed| / max(1, |closed|). A lattice-aligned query must agree to the
/// tolerance; an off-lattice one is held to the snapping bound slope * |phi - snapped|.
inline int cmd_oracle_compare(const GlobalFlags& g, const OracleArgs& a, std::ostream& out, std::ostream& err) {
  BacklashParams p{.L = 1.0, .h = 1.0};
  try {
    if (!g.config.empty()) p = detail::backlash_from_config(g.config);
  } catch (const ConfigError& e) {
    err << g.config << ": " << e.what() << '\n';
    return usage;
  }
  if (a.L) p.L = *a.L;
  if (a.h) p.h = *a.h;
  const double tol = g.tol.value_or(1e-9);
  LatticeSpec lat{.step = a.step.value_or(p.h / 100.0),
                  .phi_min = a.phi_min.value_or(-6.0 * p.h),
                  .phi_max = a.phi_max.value_or(6.0 * p.h),
                  .max_reversals = a.max_reversals};
  CsvTable table;
  table.header = {"phi", "Sa_closed", "Sa_dp", "Sr_closed", "Sr_dp", "err_a", "err_r"};
  bool pass = true;
  // Largest |I| on the window bounds how far a snapped value can move.
  const double slope = (std::max(std::abs(lat.phi_min), std::abs(lat.phi_max)) + p.h) / p.L;
  try {
    for (double q : a.phi) {
      const auto dpa = brute_force_available(q, p, lat);
      const auto dpr = brute_force_required(q, p, lat);
      const double sa = available_storage(q, p), sr = required_supply(q, p);
      const double ea = std::abs(dpa.value - sa) / std::max(1.0, std::abs(sa));
      const double er = std::abs(dpr.value - sr) / std::max(1.0, std::abs(sr));
      table.rows.push_back({q, sa, dpa.value, sr, dpr.value, ea, er});
      const double gap = std::abs(q - dpa.snapped);
      const bool aligned = gap <= 1e-12 * std::max(1.0, std::abs(q));
      const double allowed = aligned ? tol : slope * gap;
      const bool row_ok = std::abs(dpa.value - sa) <= allowed * (aligned ? std::max(1.0, std::abs(sa)) : 1.0) &&
                          std::abs(dpr.value - sr) <= allowed * (aligned ? std::max(1.0, std::abs(sr)) : 1.0);
      out << "phi " << q << (aligned ? "" : " (snapped to " + std::to_string(dpa.snapped) + ")") << ": err_a " << ea
          << ", err_r " << er << (aligned ? ", tol " : ", snapping bound ") << allowed
          << (dpa.monotone() && dpr.monotone() ? "" : ", non-monotone optimum") << (row_ok ? "" : "  FAIL") << '\n';
      pass = pass && row_ok;
    }
  } catch (const LatticeError& e) {
    err << "oracle-compare: " << e.what() << '\n';
    return usage;
  }
  const std::string csv = detail::out_path(g, a.csv);
  write_csv_file(csv, table);
  out << "wrote " << csv << "; lattice step " << lat.step << ", window [" << lat.phi_min << ", " << lat.phi_max
      << "], K = " << lat.max_reversals << ": " << (pass ? "pass" : "FAIL") << '\n';
  return pass ? ok : check_failed;
}

inline int cmd_verify(const GlobalFlags& g, const std::string& suite, int runs, std::ostream& out, std::ostream& err) {
  VerifyOptions o;
  if (g.seed) o.seed = *g.seed;
  o.tol = g.tol;
  o.runs = runs;
  VerificationReport rep;
  try {
    rep = run_suite(suite, o);
  } catch (const UnknownSuite& e) {
    err << "verify: " << e.what() << "; expected one of";
    for (const auto& s : suite_names()) err << ' ' << s;
    err << " all\n";
    return usage;
  } catch (const SimulationError& e) {
    err << "verify: solver failure: " << e.what() << '\n';
    return solver_failed;
  }
  const std::string path = detail::out_path(g, "verify_" + suite + ".csv");
  std::ofstream f(path, std::ios::binary);
  write_report_csv(f, rep);
  write_summary(out, rep);
  out << "report: " << path << '\n';
  return rep.pass() ? ok : check_failed;
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"backlash port-Hamiltonian toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config, "scenario file");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "overrides the PRBS seed (simulate) or the base seed (verify)");
  app.add_option("--tol", g.tol, "overrides check tolerances");

  auto* sim = app.add_subcommand("simulate", "simulate the configured scenario, write CSV and optional SVGs");

  ScanArgs scan;
  auto* sc = app.add_subcommand("storage-scan", "tabulate S^a, S^r, H_bf and S_gamma; draw the storage fan");
  sc->set_help_flag("--help", "print this help");  // frees -h for the backlash width
  sc->add_option("--L", scan.L, "inductance (default 1 or [params] L)");
  sc->add_option("--h", scan.h, "backlash half-width in flux (default 1 or [params] h)");
  sc->add_option("--phi-min", scan.phi_min)->capture_default_str();
  sc->add_option("--phi-max", scan.phi_max)->capture_default_str();
  sc->add_option("--points", scan.points)->capture_default_str();
  sc->add_option("--gamma", scan.gammas, "storage indices in [-h, h] (default -h, -h/2, 0, h/2, h)")->delimiter(',');
  sc->add_option("--csv", scan.csv)->capture_default_str();
  sc->add_option("--svg", scan.svg)->capture_default_str();

  std::string suite;
  int runs = 100;
  auto* ver = app.add_subcommand("verify", "run a property suite and write a report");
  ver->add_option("suite", suite, "sandwich, interlacing, passivity, energy-balance, oracle, cycle-area, regularization, all")
      ->required();
  ver->add_option("--runs", runs, "seeded runs per input family and topology (passivity)")->capture_default_str()
      ->check(CLI::PositiveNumber);

  OracleArgs orc;
  auto* oc = app.add_subcommand("oracle-compare", "brute-force DP against the closed-form extremal storages");
  oc->set_help_flag("--help", "print this help");
  oc->add_option("--L", orc.L);
  oc->add_option("--h", orc.h);
  oc->add_option("--phi", orc.phi, "query fluxes")->delimiter(',');
  oc->add_option("--step", orc.step, "lattice step, must divide h (default h/100)");
  oc->add_option("--K", orc.max_reversals, "reversal cap")->capture_default_str();
  oc->add_option("--phi-min", orc.phi_min);
  oc->add_option("--phi-max", orc.phi_max);
  oc->add_option("--csv", orc.csv)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return usage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(g, out, err);
    if (sc->parsed()) return cmd_storage_scan(g, scan, out, err);
    if (ver->parsed()) return cmd_verify(g, suite, runs, out, err);
    if (oc->parsed()) return cmd_oracle_compare(g, orc, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return solver_failed;
  }
  return usage;
}

}  // namespace bph::cli
