#pragma once

// Minimal static SVG 1.1 line plots: polylines, one optional shaded band,
// axes with ticks. Enough for the phase, energy and storage-fan figures.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bph/csv.hpp"
#include "bph/storage.hpp"
#include "bph/trajectory.hpp"

namespace bph {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool dashed = false;
  double width = 1.5;
};

struct PlotBand {
  std::string label;
  std::vector<std::pair<double, double>> lower;  // same x values as upper
  std::vector<std::pair<double, double>> upper;
  std::string fill = "#cccccc";
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<PlotBand> bands;
  double width = 640;
  double height = 480;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
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

/// Tick spacing of 1, 2 or 5 times a power of ten, about n ticks over span.
inline double tick_step(double span, int n = 6) {
  const double raw = span / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

inline void write_svg(std::ostream& out, const Plot& plot) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto grow = [&](const std::pair<double, double>& p) {
    if (!std::isfinite(p.first) || !std::isfinite(p.second)) return;
    x0 = std::min(x0, p.first);
    x1 = std::max(x1, p.first);
    y0 = std::min(y0, p.second);
    y1 = std::max(y1, p.second);
  };
  for (const auto& s : plot.series) std::for_each(s.points.begin(), s.points.end(), grow);
  for (const auto& b : plot.bands) {
    std::for_each(b.lower.begin(), b.lower.end(), grow);
    std::for_each(b.upper.begin(), b.upper.end(), grow);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double padx = 0.04 * (x1 - x0), pady = 0.04 * (y1 - y0);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;

  const double ml = 70, mr = 150, mt = 40, mb = 55;
  const double pw = plot.width - ml - mr, ph = plot.height - mt - mb;
  auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto Y = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };
  auto path = [&](const std::vector<std::pair<double, double>>& pts) {
    std::ostringstream os;
    os.precision(7);
    for (const auto& [x, y] : pts) {
      if (std::isfinite(x) && std::isfinite(y)) os << X(x) << ',' << Y(y) << ' ';
    }
    return os.str();
  };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << plot.width << "\" height=\""
      << plot.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::escape_xml(plot.title) << "</text>\n";

  for (const auto& b : plot.bands) {
    std::vector<std::pair<double, double>> ring = b.lower;
    ring.insert(ring.end(), b.upper.rbegin(), b.upper.rend());
    out << "<polygon points=\"" << path(ring) << "\" fill=\"" << b.fill << "\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";
  }

  // Axes box and ticks.
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double dx = detail::tick_step(x1 - x0), dy = detail::tick_step(y1 - y0);
  for (double t = std::ceil(x0 / dx) * dx; t <= x1; t += dx) {
    const double tx = std::abs(t) < 1e-12 * dx ? 0.0 : t;
    out << "<line x1=\"" << X(tx) << "\" y1=\"" << mt + ph << "\" x2=\"" << X(tx) << "\" y2=\"" << mt + ph + 5
        << "\" stroke=\"black\"/><text x=\"" << X(tx) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
        << detail::fmt(tx) << "</text>\n";
  }
  for (double t = std::ceil(y0 / dy) * dy; t <= y1; t += dy) {
    const double ty = std::abs(t) < 1e-12 * dy ? 0.0 : t;
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(ty) << "\" x2=\"" << ml << "\" y2=\"" << Y(ty)
        << "\" stroke=\"black\"/><text x=\"" << ml - 8 << "\" y=\"" << Y(ty) + 4 << "\" text-anchor=\"end\">"
        << detail::fmt(ty) << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << plot.height - 12 << "\" text-anchor=\"middle\">"
      << detail::escape_xml(plot.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << mt + ph / 2
      << ")\">" << detail::escape_xml(plot.y_label) << "</text>\n";

  for (const auto& s : plot.series) {
    out << "<polyline points=\"" << path(s.points) << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
        << s.width << "\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
  }

  // Legend.
  double ly = mt + 10;
  auto legend = [&](const std::string& label, const std::string& swatch) {
    out << swatch << "<text x=\"" << ml + pw + 38 << "\" y=\"" << ly + 4 << "\">" << detail::escape_xml(label)
        << "</text>\n";
    ly += 18;
  };
  for (const auto& b : plot.bands) {
    if (b.label.empty()) continue;
    legend(b.label, "<rect x=\"" + detail::fmt(ml + pw + 10) + "\" y=\"" + detail::fmt(ly - 5) +
                        "\" width=\"22\" height=\"10\" fill=\"" + b.fill + "\" fill-opacity=\"0.5\"/>");
  }
  for (const auto& s : plot.series) {
    if (s.label.empty()) continue;
    legend(s.label, "<line x1=\"" + detail::fmt(ml + pw + 10) + "\" y1=\"" + detail::fmt(ly) + "\" x2=\"" +
                        detail::fmt(ml + pw + 32) + "\" y2=\"" + detail::fmt(ly) + "\" stroke=\"" + s.color +
                        "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>");
  }
  out << "</svg>\n";
}

inline void write_svg_file(const std::string& path, const Plot& plot) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_svg(out, plot);
}

/// Backlash current against flux; switches show up as horizontal jumps.
inline Plot phase_plot(const TrajectoryRecord& traj) {
  Plot p{.title = std::string("backlash phase plot (") + to_string(traj.topology) + ")",
         .x_label = "I_L [A]",
         .y_label = "phi [Wb]"};
  PlotSeries s{.label = "(I_L, phi)"};
  for (const auto& smp : traj.samples) {
    if (smp.I_L_before) s.points.emplace_back(*smp.I_L_before, smp.phi);
    s.points.emplace_back(smp.I_L, smp.phi);
  }
  p.series.push_back(std::move(s));
  return p;
}

inline Plot energy_plot(const TrajectoryRecord& traj) {
  Plot p{.title = "energy ledger", .x_label = "t [s]", .y_label = "energy [J]"};
  PlotSeries H{.label = "H", .color = "#1f77b4"};
  PlotSeries W{.label = "supplied", .color = "#2ca02c"};
  PlotSeries R{.label = "resistive", .color = "#d62728"};
  PlotSeries D{.label = "hysteretic", .color = "#9467bd"};
  for (const auto& smp : traj.samples) {
    H.points.emplace_back(smp.t, smp.ledger.H);
    W.points.emplace_back(smp.t, smp.ledger.supplied);
    R.points.emplace_back(smp.t, smp.ledger.resistive);
    D.points.emplace_back(smp.t, smp.ledger.hysteretic);
  }
  p.series = {std::move(H), std::move(W), std::move(R), std::move(D)};
  if (traj.topology == Topology::element) p.series.erase(p.series.begin() + 2);
  return p;
}

/// Storage fan from a `phi,Sa,Sr,H_bf,S_gamma[...]` table: S^a and S^r bound a
/// shaded band, every S_gamma is drawn inside it, H_bf dashed.
inline Plot storage_fan_plot(const CsvTable& table) {
  Plot p{.title = "admissible storage functions", .x_label = "phi [Wb]", .y_label = "S [J]"};
  const std::size_t c_phi = table.column("phi"), c_a = table.column("Sa"), c_r = table.column("Sr"),
                    c_h = table.column("H_bf");
  PlotBand band{.label = "admissible band", .fill = "#c6dbef"};
  PlotSeries Sa{.label = "S^a", .color = "#08519c", .width = 2.5};
  PlotSeries Sr{.label = "S^r", .color = "#a50f15", .width = 2.5};
  PlotSeries Hbf{.label = "H_bf", .color = "black", .dashed = true};
  for (const auto& row : table.rows) {
    band.lower.emplace_back(row[c_phi], row[c_a]);
    band.upper.emplace_back(row[c_phi], row[c_r]);
    Sa.points.emplace_back(row[c_phi], row[c_a]);
    Sr.points.emplace_back(row[c_phi], row[c_r]);
    Hbf.points.emplace_back(row[c_phi], row[c_h]);
  }
  p.bands.push_back(std::move(band));
  static const char* palette[] = {"#6baed6", "#74c476", "#fd8d3c", "#9e9ac8", "#fdd0a2", "#a1d99b"};
  std::size_t k = 0;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].rfind("S_gamma", 0) != 0) continue;
    PlotSeries s{.label = table.header[c], .color = palette[k++ % 6], .width = 1.0};
    for (const auto& row : table.rows) s.points.emplace_back(row[c_phi], row[c]);
    p.series.push_back(std::move(s));
  }
  p.series.push_back(std::move(Sa));
  p.series.push_back(std::move(Sr));
  p.series.push_back(std::move(Hbf));
  return p;
}

/// Rows `phi,Sa,Sr,H_bf,S_gamma[g]...` on an even grid of `points` fluxes.
inline CsvTable storage_scan_table(const BacklashParams& p, double phi_min, double phi_max, std::size_t points,
                                   const std::vector<double>& gammas) {
  p.validate();
  if (!(phi_max > phi_min) || points < 2) throw std::invalid_argument("storage scan needs phi_max > phi_min and >= 2 points");
  std::vector<StorageIndex> idx;
  for (double g : gammas) idx.emplace_back(g, p);
  CsvTable t;
  t.header = {"phi", "Sa", "Sr", "H_bf"};
  for (double g : gammas) t.header.push_back("S_gamma[" + format_number(g) + "]");
  for (std::size_t i = 0; i < points; ++i) {
    const double phi = i + 1 == points ? phi_max
                                       : phi_min + (phi_max - phi_min) * static_cast<double>(i) /
                                                       static_cast<double>(points - 1);
    std::vector<double> row = {phi, available_storage(phi, p), required_supply(phi, p), hamiltonian_bf(phi, p)};
    for (const auto& g : idx) row.push_back(storage_gamma(phi, g, p));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace bph
