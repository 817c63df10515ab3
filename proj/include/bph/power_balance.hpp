#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "bph/ph_structure.hpp"
#include "bph/report.hpp"
#include "bph/trajectory.hpp"

namespace bph {

/// Stored energy of a sample, evaluated through the structure's Hamiltonian.
inline double stored_energy(const PHStructure& sys, const Sample& s) {
  if (sys.topology == Topology::element) return sys.hamiltonian(Eigen::VectorXd::Constant(1, s.phi));
  return sys.hamiltonian(Eigen::Vector2d(s.phi, s.Q));
}

/// Certifies a trajectory of `sys` against the power balance
///   dH/dt = u*y - (resistive loss) - (hysteretic loss).
/// Checked per sample interval and cumulatively:
///   - passivity: dH - supplied <= tol,
///   - decomposition: |dH - supplied + resistive + hysteretic| <= tol,
///   - both losses nondecreasing.
inline CertificateReport power_balance_check(const PHStructure& sys, const TrajectoryRecord& trajectory,
                                             double tol) {
  if (trajectory.topology != sys.topology) {
    throw std::invalid_argument("power_balance_check: trajectory topology does not match the structure");
  }
  CertificateReport report{.name = "power-balance", .tolerance = tol};
  if (trajectory.empty()) return report;
  const auto& s = trajectory.samples;
  const double H0 = stored_energy(sys, s.front());
  const EnergyLedger& l0 = s.front().ledger;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const EnergyLedger& a = s[k - 1].ledger;
    const EnergyLedger& b = s[k].ledger;
    const double dH = stored_energy(sys, s[k]) - stored_energy(sys, s[k - 1]);
    const double dW = b.supplied - a.supplied;
    const double dR = b.resistive - a.resistive;
    const double dD = b.hysteretic - a.hysteretic;
    const double t = s[k].t;
    report.record(k, t, dW - dH, "interval passivity");
    report.record(k, t, -std::abs(dH - dW + dR + dD), "interval decomposition");
    report.record(k, t, dR, "resistive loss nondecreasing");
    report.record(k, t, dD, "hysteretic loss nondecreasing");

    const double cH = stored_energy(sys, s[k]) - H0;
    const double cW = b.supplied - l0.supplied;
    report.record(k, t, cW - cH, "cumulative passivity");
    report.record(k, t,
                  -std::abs(cH - cW + (b.resistive - l0.resistive) + (b.hysteretic - l0.hysteretic)),
                  "cumulative decomposition");
  }
  return report;
}

}  // namespace bph
