#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace bph {

enum class Topology { element, parallel, series };

inline const char* to_string(Topology t) {
  switch (t) {
    case Topology::element: return "element";
    case Topology::parallel: return "parallel";
    case Topology::series: return "series";
  }
  return "?";
}

/// Cumulative energy bookkeeping along a trajectory.
///
/// residual = H - H(0) - supplied + resistive + hysteretic, which vanishes for an
/// exact power balance.
struct EnergyLedger {
  double H = 0.0;
  double supplied = 0.0;
  double resistive = 0.0;
  double hysteretic = 0.0;
  double residual = 0.0;
};

/// One time-stamped sample.
///
/// V and I are the port variables of the simulated system: for the element and
/// the series circuit the source voltage and the loop current, for the parallel
/// circuit the common voltage and the source current. I_L is always the current
/// through the backlash branch.
struct Sample {
  double t = 0.0;
  double V = 0.0;
  double I = 0.0;
  double I_L = 0.0;
  double phi = 0.0;
  double Q = 0.0;
  double s = 0.0;        // active sign selection after the sample
  double phi_dot = 0.0;  // state derivative after the sample
  double Q_dot = 0.0;
  EnergyLedger ledger;
  /// Present at selection switches: I_L and I just before the switch.
  std::optional<double> I_L_before;
  std::optional<double> I_before;

  bool is_event() const { return I_L_before.has_value(); }
};

/// Supply-rate pair (u, y) of a sample for the given topology.
inline double port_input(const Sample& s, Topology t) { return t == Topology::parallel ? s.I : s.V; }
inline double port_output(const Sample& s, Topology t) { return t == Topology::parallel ? s.V : s.I; }

/// Immutable result of a simulation run.
struct TrajectoryRecord {
  Topology topology = Topology::element;
  std::vector<Sample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  const Sample& front() const { return samples.front(); }
  const Sample& back() const { return samples.back(); }
};

}  // namespace bph
