#pragma once

// Brute-force oracles for the extremal storage functions and for the energy
// lost per hysteresis cycle.
//
// The backlash element is rate independent: the supply integral of I*V over
// any input equals the flux-path integral of I dphi, and along a monotone run
// the current follows one of the two branches I = (phi +- h)/L. A path is thus
// fully described by its reversal points, and extremal supply problems become
// shortest-path problems on a flux lattice.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bph/backlash.hpp"
#include "bph/trajectory.hpp"

namespace bph {

/// Reversal points of a flux path; consecutive points must differ.
struct FluxPath {
  std::vector<double> points;
  double s0 = 0.0;  // initial selection; irrelevant to energy since jumps are free

  void validate() const {
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (points[i] == points[i - 1]) throw std::invalid_argument("FluxPath: zero-length segment");
    }
  }
  std::size_t segments() const { return points.size() < 2 ? 0 : points.size() - 1; }
  /// Number of direction changes between consecutive segments.
  std::size_t reversals() const {
    std::size_t n = 0;
    for (std::size_t i = 2; i < points.size(); ++i) {
      if ((points[i] - points[i - 1]) * (points[i - 1] - points[i - 2]) < 0.0) ++n;
    }
    return n;
  }
};

namespace detail {
inline double rising_primitive(double phi, const BacklashParams& p) { return (phi + p.h) * (phi + p.h) / (2.0 * p.L); }
inline double falling_primitive(double phi, const BacklashParams& p) { return (phi - p.h) * (phi - p.h) / (2.0 * p.L); }
}  // namespace detail

/// Integral of I dphi along the path (energy absorbed by the element).
inline double path_energy(const FluxPath& path, const BacklashParams& p) {
  path.validate();
  double total = 0.0;
  for (std::size_t i = 1; i < path.points.size(); ++i) {
    const double a = path.points[i - 1];
    const double b = path.points[i];
    total += b > a ? detail::rising_primitive(b, p) - detail::rising_primitive(a, p)
                   : detail::falling_primitive(b, p) - detail::falling_primitive(a, p);
  }
  return total;
}

/// Uniform flux lattice anchored at 0, so that 0 and +-h are lattice points
/// whenever the step divides h.
struct LatticeSpec {
  double step = 0.01;
  double phi_min = -6.0;
  double phi_max = 6.0;
  int max_reversals = 5;
};

class LatticeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OracleResult {
  double value = 0.0;     // optimal energy (extracted for S^a, supplied for S^r)
  double query = 0.0;     // requested flux
  double snapped = 0.0;   // lattice point actually used
  FluxPath path;          // optimizing path
  /// No reversal anywhere along the optimizing path.
  bool monotone() const { return path.reversals() == 0; }
};

namespace detail {

inline void validate_lattice(const LatticeSpec& lat, const BacklashParams& p, double phi0) {
  p.validate();
  if (!(std::isfinite(lat.step) && lat.step > 0.0)) throw LatticeError("lattice step must be > 0");
  if (lat.max_reversals < 0) throw LatticeError("lattice reversal cap must be >= 0");
  const double ratio = p.h / lat.step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw LatticeError("lattice step " + std::to_string(lat.step) + " does not divide h = " + std::to_string(p.h));
  }
  if (!(lat.phi_min <= -p.h && lat.phi_max >= p.h)) throw LatticeError("lattice window must contain [-h, h]");
  if (!(lat.phi_min <= phi0 && phi0 <= lat.phi_max)) {
    throw LatticeError("lattice window does not contain the query flux " + std::to_string(phi0));
  }
  if (!(lat.phi_min <= 0.0 && lat.phi_max >= 0.0)) throw LatticeError("lattice window must contain 0");
}

/// Minimizes the path integral of I dphi from lattice index `start` to any
/// index accepted by `terminal`, with at most `max_reversals` direction changes.
template <typename Terminal>
FluxPath lattice_shortest_path(const std::vector<double>& pts, std::size_t start, const BacklashParams& p,
                               int max_reversals, Terminal terminal, double& best_value) {
  const std::size_t n = pts.size();
  const auto layers = static_cast<std::size_t>(max_reversals) + 1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<double> fu(n), fd(n);
  for (std::size_t i = 0; i < n; ++i) {
    fu[i] = rising_primitive(pts[i], p);
    fd[i] = falling_primitive(pts[i], p);
  }
  // cost[k][d][i]: best integral ending at i while moving in direction d
  // (0 = up, 1 = down) after k reversals; from[k][d][i]: start of the last run.
  std::vector<std::vector<std::vector<double>>> cost(layers, std::vector<std::vector<double>>(2, std::vector<double>(n, inf)));
  std::vector<std::vector<std::vector<std::size_t>>> from(
      layers, std::vector<std::vector<std::size_t>>(2, std::vector<std::size_t>(n, none)));

  for (std::size_t k = 0; k < layers; ++k) {
    // Up runs: cost = fu[i] + min_{j<i} (entry[j] - fu[j]).
    double best = inf;
    std::size_t arg = none;
    for (std::size_t i = 0; i < n; ++i) {
      if (best < inf) {
        cost[k][0][i] = fu[i] + best;
        from[k][0][i] = arg;
      }
      const double entry = k == 0 ? (i == start ? 0.0 : inf) : cost[k - 1][1][i];
      if (entry < inf && entry - fu[i] < best) {
        best = entry - fu[i];
        arg = i;
      }
    }
    best = inf;
    arg = none;
    for (std::size_t r = n; r-- > 0;) {
      if (best < inf) {
        cost[k][1][r] = fd[r] + best;
        from[k][1][r] = arg;
      }
      const double entry = k == 0 ? (r == start ? 0.0 : inf) : cost[k - 1][0][r];
      if (entry < inf && entry - fd[r] < best) {
        best = entry - fd[r];
        arg = r;
      }
    }
  }

  // Fewer segments win ties, so improvements must beat rounding noise.
  const double scale = std::max({1.0, fu.front(), fu.back(), fd.front(), fd.back()});
  const double margin = 1e-13 * scale;
  best_value = terminal(start) ? 0.0 : inf;
  std::size_t bk = none, bd = 0, bi = none;
  for (std::size_t k = 0; k < layers; ++k) {
    for (std::size_t d = 0; d < 2; ++d) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!terminal(i) || cost[k][d][i] == inf) continue;
        if (cost[k][d][i] < best_value - margin || (best_value == inf)) {
          best_value = cost[k][d][i];
          bk = k;
          bd = d;
          bi = i;
        }
      }
    }
  }
  FluxPath path;
  if (best_value == inf) return path;
  std::vector<double> rev{pts[bi]};
  if (bk != none) {
    std::size_t k = bk, d = bd, i = bi;
    for (;;) {
      const std::size_t j = from[k][d][i];
      rev.push_back(pts[j]);
      if (k == 0) break;
      --k;
      d = 1 - d;
      i = j;
    }
  }
  path.points.assign(rev.rbegin(), rev.rend());
  return path;
}

inline std::vector<double> lattice_points(const LatticeSpec& lat) {
  const auto lo = static_cast<long long>(std::ceil(lat.phi_min / lat.step - 1e-9));
  const auto hi = static_cast<long long>(std::floor(lat.phi_max / lat.step + 1e-9));
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (long long i = lo; i <= hi; ++i) pts.push_back(static_cast<double>(i) * lat.step);
  return pts;
}

inline std::size_t nearest_index(const std::vector<double>& pts, double phi) {
  auto it = std::lower_bound(pts.begin(), pts.end(), phi);
  if (it == pts.end()) return pts.size() - 1;
  if (it == pts.begin()) return 0;
  const auto hi = static_cast<std::size_t>(it - pts.begin());
  return std::abs(pts[hi] - phi) < std::abs(pts[hi - 1] - phi) ? hi : hi - 1;
}

}  // namespace detail

/// Largest energy extractable from flux phi0 over lattice paths that end in the
/// ground set |phi| <= h. Off-lattice queries are snapped to the nearest point.
inline OracleResult brute_force_available(double phi0, const BacklashParams& p, const LatticeSpec& lat) {
  detail::validate_lattice(lat, p, phi0);
  const auto pts = detail::lattice_points(lat);
  const std::size_t start = detail::nearest_index(pts, phi0);
  const double ground = p.h + 1e-9 * lat.step;
  double best = 0.0;
  OracleResult r;
  r.query = phi0;
  r.snapped = pts[start];
  r.path = detail::lattice_shortest_path(pts, start, p, lat.max_reversals,
                                         [&](std::size_t i) { return std::abs(pts[i]) <= ground; }, best);
  r.value = -best;
  return r;
}

/// Least energy needed to reach flux phi0 from the origin over lattice paths.
inline OracleResult brute_force_required(double phi0, const BacklashParams& p, const LatticeSpec& lat) {
  detail::validate_lattice(lat, p, phi0);
  const auto pts = detail::lattice_points(lat);
  const std::size_t origin = detail::nearest_index(pts, 0.0);
  const std::size_t target = detail::nearest_index(pts, phi0);
  double best = 0.0;
  OracleResult r;
  r.query = phi0;
  r.snapped = pts[target];
  r.path = detail::lattice_shortest_path(pts, origin, p, lat.max_reversals,
                                         [&](std::size_t i) { return i == target; }, best);
  r.value = best;
  return r;
}

/// Energy dissipated by one closed cycle between phi1 <= phi2: (2h/L)(phi2 - phi1).
inline double cycle_dissipation(double phi1, double phi2, const BacklashParams& p) {
  if (!(phi2 >= phi1)) throw std::invalid_argument("cycle_dissipation: requires phi2 >= phi1");
  return 2.0 * p.h * (phi2 - phi1) / p.L;
}

struct LoopArea {
  double area = 0.0;  // signed; positive for counterclockwise loops in the (I, phi) plane
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t begin_sample = 0;
  std::size_t end_sample = 0;
};

/// Shoelace area of the first closed (I_L, phi) loop starting at the first
/// sample with t >= t_start. Switch samples contribute both one-sided currents,
/// so the jump segments are part of the polygon.
inline LoopArea loop_area(const TrajectoryRecord& trajectory, double t_start = 0.0, double tol = 1e-9) {
  struct Vertex {
    double I;
    double phi;
    std::size_t sample;
  };
  std::vector<Vertex> v;
  for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
    const Sample& s = trajectory.samples[k];
    if (s.t < t_start) continue;
    if (s.I_L_before) v.push_back({*s.I_L_before, s.phi, k});
    v.push_back({s.I_L, s.phi, k});
  }
  if (v.empty()) throw std::runtime_error("loop_area: no samples after t_start");
  auto dist = [&](const Vertex& a) { return std::max(std::abs(a.I - v[0].I), std::abs(a.phi - v[0].phi)); };

  LoopArea out;
  out.begin_sample = v[0].sample;
  out.t_begin = trajectory.samples[v[0].sample].t;
  std::size_t end = 0;
  bool left = false;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!left) {
      left = dist(v[i]) > tol;
    } else if (dist(v[i]) <= tol) {
      end = i;
      break;
    }
  }
  if (!left) {
    out.end_sample = v.back().sample;
    out.t_end = trajectory.samples[out.end_sample].t;
    return out;
  }
  if (end == 0) throw std::runtime_error("loop_area: no closed cycle detected");
  double twice = 0.0;
  for (std::size_t i = 0; i < end; ++i) twice += v[i].I * v[i + 1].phi - v[i + 1].I * v[i].phi;
  twice += v[end].I * v[0].phi - v[0].I * v[end].phi;
  out.area = 0.5 * twice;
  out.end_sample = v[end].sample;
  out.t_end = trajectory.samples[out.end_sample].t;
  return out;
}

}  // namespace bph
