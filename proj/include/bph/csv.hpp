#pragma once

// CSV emission with shortest round-trip decimal text, and the matching reader.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "bph/power_balance.hpp"
#include "bph/trajectory.hpp"

namespace bph {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_number(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, p);
}

inline double parse_number(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw std::out_of_range("no column '" + name + "'");
  }
};

inline void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::invalid_argument("write_csv: ragged row");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("read_csv: empty input");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto cell = std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(parse_number(cell));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != t.header.size()) {
      throw std::invalid_argument("read_csv: line " + std::to_string(n) + " has " + std::to_string(row.size()) +
                                  " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Trajectory table `t,V,I,phi,Q,H,supplied,resistive,hysteretic,residual`
/// (no Q for the bare element). A switch appears as two rows at the same t,
/// the first carrying the current just before the jump.
inline CsvTable trajectory_table(const TrajectoryRecord& traj) {
  const bool with_q = traj.topology != Topology::element;
  CsvTable t;
  t.header = {"t", "V", "I", "phi"};
  if (with_q) t.header.push_back("Q");
  for (const char* c : {"H", "supplied", "resistive", "hysteretic", "residual"}) t.header.emplace_back(c);
  auto row = [&](const Sample& s, double I) {
    std::vector<double> r = {s.t, s.V, I, s.phi};
    if (with_q) r.push_back(s.Q);
    const auto& l = s.ledger;
    r.insert(r.end(), {l.H, l.supplied, l.resistive, l.hysteretic, l.residual});
    return r;
  };
  for (const auto& s : traj.samples) {
    if (s.is_event()) t.rows.push_back(row(s, *s.I_before));
    t.rows.push_back(row(s, s.I));
  }
  return t;
}

inline void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj) { write_csv(out, trajectory_table(traj)); }

inline void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(out, table);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  return read_csv(in);
}

}  // namespace bph
