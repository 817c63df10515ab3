#pragma once

// Storage functions of the backlash inductor for the supply rate I*V.
//
// The family S_gamma, gamma in [-h, h], is a fan of shifted parabolas with a
// flat zero plateau around the origin. Its extremal members are the available
// storage (gamma = -h) and the required supply from the origin (gamma = +h).
// All of them depend on flux only; the current enters solely through the
// admissibility constraint |L*I - phi| <= h.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "bph/backlash.hpp"
#include "bph/report.hpp"
#include "bph/trajectory.hpp"

namespace bph {

/// Index of a storage function, constrained to [-h, h].
class StorageIndex {
 public:
  StorageIndex(double gamma, const BacklashParams& p) : gamma_(gamma) {
    if (!(gamma >= -p.h && gamma <= p.h)) {
      throw std::invalid_argument("storage index gamma = " + std::to_string(gamma) + " lies outside [-h, h] = [" +
                                  std::to_string(-p.h) + ", " + std::to_string(p.h) + "]");
    }
  }
  double value() const { return gamma_; }

 private:
  double gamma_;
};

inline double storage_gamma(double phi, const StorageIndex& index, const BacklashParams& p) {
  const double g = index.value();
  const double edge = (p.h - g) / 2.0;
  const double offset = (p.h + g) / 2.0;
  // Ties at the edges fall on the plateau; both neighbouring branches vanish there.
  if (phi > edge) return ((phi + g) * (phi + g) - offset * offset) / (2.0 * p.L);
  if (phi < -edge) return ((phi - g) * (phi - g) - offset * offset) / (2.0 * p.L);
  return 0.0;
}

inline double storage_gamma(double phi, double gamma, const BacklashParams& p) {
  return storage_gamma(phi, StorageIndex(gamma, p), p);
}

/// Largest energy extractable from flux phi before reaching the ground set.
inline double available_storage(double phi, const BacklashParams& p) {
  if (phi > p.h) return ((phi - p.h) * (phi - p.h)) / (2.0 * p.L);
  if (phi < -p.h) return ((phi + p.h) * (phi + p.h)) / (2.0 * p.L);
  return 0.0;
}

/// Least energy needed to reach flux phi from the origin.
inline double required_supply(double phi, const BacklashParams& p) {
  if (phi > 0.0) return ((phi + p.h) * (phi + p.h) - p.h * p.h) / (2.0 * p.L);
  if (phi < 0.0) return ((phi - p.h) * (phi - p.h) - p.h * p.h) / (2.0 * p.L);
  return 0.0;
}

/// Checks S^a <= S_gamma <= S^r and S^a <= H_bf <= S^r on every grid point.
inline CertificateReport check_sandwich(std::span<const double> phi_grid, std::span<const double> gamma_grid,
                                        const BacklashParams& p, double tol) {
  if (phi_grid.empty() || gamma_grid.empty()) throw std::invalid_argument("check_sandwich: empty grid");
  if (!(tol >= 0.0)) throw std::invalid_argument("check_sandwich: tolerance must be >= 0");
  CertificateReport report{.name = "sandwich", .tolerance = tol};
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    const double phi = phi_grid[i];
    const double sa = available_storage(phi, p);
    const double sr = required_supply(phi, p);
    const double hbf = hamiltonian_bf(phi, p);
    report.record(i, phi, hbf - sa, "H_bf >= S^a");
    report.record(i, phi, sr - hbf, "H_bf <= S^r");
    for (double g : gamma_grid) {
      const double sg = storage_gamma(phi, g, p);
      report.record(i, phi, sg - sa, "S_gamma >= S^a");
      report.record(i, phi, sr - sg, "S_gamma <= S^r");
    }
  }
  return report;
}

/// Checks S_gamma1 <= S_gamma2 pointwise for gamma1 < gamma2.
inline CertificateReport check_interlacing(double gamma1, double gamma2, std::span<const double> phi_grid,
                                           const BacklashParams& p, double tol = 0.0) {
  const StorageIndex lo(gamma1, p);
  const StorageIndex hi(gamma2, p);
  if (!(gamma1 < gamma2)) {
    throw std::invalid_argument("check_interlacing: requires gamma1 < gamma2");
  }
  CertificateReport report{.name = "interlacing", .tolerance = tol};
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    const double phi = phi_grid[i];
    report.record(i, phi, storage_gamma(phi, hi, p) - storage_gamma(phi, lo, p), "S_gamma1 <= S_gamma2");
  }
  return report;
}

/// Integrated dissipation inequality for S_gamma along an element trajectory,
/// per sample interval and cumulatively from the first sample. The supply is
/// read from the trajectory's ledger.
inline CertificateReport dissipation_rate_check(const TrajectoryRecord& trajectory, const StorageIndex& gamma,
                                                const BacklashParams& p, double tol) {
  if (trajectory.topology != Topology::element) {
    throw std::invalid_argument("dissipation_rate_check: needs an element-only trajectory");
  }
  CertificateReport report{.name = "dissipation-rate", .tolerance = tol};
  if (trajectory.empty()) return report;
  const auto& samples = trajectory.samples;
  const double s0 = storage_gamma(samples.front().phi, gamma, p);
  const double w0 = samples.front().ledger.supplied;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const auto& a = samples[k - 1];
    const auto& b = samples[k];
    const double dS = storage_gamma(b.phi, gamma, p) - storage_gamma(a.phi, gamma, p);
    report.record(k, b.t, (b.ledger.supplied - a.ledger.supplied) - dS, "interval dissipation inequality");
    report.record(k, b.t, (b.ledger.supplied - w0) - (storage_gamma(b.phi, gamma, p) - s0),
                  "cumulative dissipation inequality");
  }
  return report;
}

}  // namespace bph
