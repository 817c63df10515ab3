#pragma once

// Port-Hamiltonian structures with nonlinear dissipation and feedthrough:
//
//   x' = (J - R) e + G u - dP/de - K dP/du
//   y  = G^T e + M u + dP/du,           e = dH/dx,
//
// with J, M skew and R symmetric positive semidefinite. K couples the
// feedthrough subgradient back into the state equation; it is zero except for
// the series circuit, whose state equation carries the sign term explicitly.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "bph/backlash.hpp"
#include "bph/report.hpp"
#include "bph/trajectory.hpp"

namespace bph {

struct CircuitParams {
  double R = 1.0;
  double C = 1.0;
  BacklashParams backlash;

  void validate() const {
    backlash.validate();
    if (!(std::isfinite(R) && R > 0.0)) throw std::invalid_argument("circuit parameter R must be finite and > 0");
    if (!(std::isfinite(C) && C > 0.0)) throw std::invalid_argument("circuit parameter C must be finite and > 0");
  }
};

/// Which voltage selects the backlash sign in the series circuit.
enum class SeriesSign {
  source_voltage,    // sign(V) of the external source, as the series model is written
  inductor_voltage,  // sign(phi'), the voltage across the backlash element itself
};

struct Subgradients {
  Eigen::VectorXd dP_de;
  Eigen::VectorXd dP_du;
};

struct PHFlow {
  Eigen::VectorXd x_dot;
  Eigen::VectorXd y;
};

struct PHStructure {
  Topology topology = Topology::element;
  CircuitParams params;
  SeriesSign series_sign = SeriesSign::source_voltage;

  Eigen::MatrixXd J;  // skew interconnection, n x n
  Eigen::MatrixXd R;  // resistive part, n x n
  Eigen::MatrixXd G;  // input matrix, n x m
  Eigen::MatrixXd M;  // skew feedthrough, m x m
  Eigen::MatrixXd K;  // feedthrough-to-state coupling, n x m

  std::function<double(const Eigen::VectorXd&)> hamiltonian;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  /// P(x, e, u).
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)> potential;
  /// Scalar whose multivalued sign the potential's subdifferential contains.
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)> switching_argument;
  /// Subgradients of P for a given selection s from sign(switching_argument).
  std::function<Subgradients(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&, double)>
      subgradient;
  /// The selection the model picks at (x, e, u). Explicit sign of the switching
  /// argument, except for the series circuit driven by its inductor voltage,
  /// where the sign is implicit and solved in closed form.
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)> select;

  Eigen::Index n() const { return J.rows(); }
  Eigen::Index m() const { return G.cols(); }

  /// J - R, the single matrix the circuit equations are usually written with.
  Eigen::MatrixXd combined_interconnection() const { return J - R; }

  PHFlow flow(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double s) const {
    const Eigen::VectorXd e = gradient(x);
    const Subgradients dp = subgradient(x, e, u, s);
    PHFlow f;
    f.x_dot = (J - R) * e + G * u - dp.dP_de - K * dp.dP_du;
    f.y = G.transpose() * e + M * u + dp.dP_du;
    return f;
  }
};

namespace detail {

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline void attach_energy(PHStructure& sys) {
  const double L = sys.params.backlash.L;
  const double C = sys.params.C;
  if (sys.topology == Topology::element) {
    sys.hamiltonian = [L](const Eigen::VectorXd& x) { return x(0) * x(0) / (2.0 * L); };
    sys.gradient = [L](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x(0) / L); };
  } else {
    sys.hamiltonian = [L, C](const Eigen::VectorXd& x) { return x(0) * x(0) / (2.0 * L) + x(1) * x(1) / (2.0 * C); };
    sys.gradient = [L, C](const Eigen::VectorXd& x) { return Eigen::Vector2d(x(0) / L, x(1) / C).eval(); };
  }
}

inline void attach_select(PHStructure& sys) {
  if (sys.select) return;
  auto arg = sys.switching_argument;
  sys.select = [arg](const Eigen::VectorXd& x, const Eigen::VectorXd& e, const Eigen::VectorXd& u) {
    return sign_of(arg(x, e, u));
  };
}

}  // namespace detail

/// Single backlash inductor: x = phi, u = V, y = I, J = 0, G = 1, M = 0.
inline PHStructure build_backlash_element(const BacklashParams& p) {
  p.validate();
  PHStructure sys;
  sys.topology = Topology::element;
  sys.params.backlash = p;
  sys.J = Eigen::MatrixXd::Zero(1, 1);
  sys.R = Eigen::MatrixXd::Zero(1, 1);
  sys.G = Eigen::MatrixXd::Ones(1, 1);
  sys.M = Eigen::MatrixXd::Zero(1, 1);
  sys.K = Eigen::MatrixXd::Zero(1, 1);
  detail::attach_energy(sys);
  const double eta = p.offset_current();
  sys.potential = [eta](const auto&, const auto&, const Eigen::VectorXd& u) { return eta * std::abs(u(0)); };
  sys.switching_argument = [](const auto&, const auto&, const Eigen::VectorXd& u) { return u(0); };
  sys.subgradient = [eta](const auto&, const auto&, const auto&, double s) {
    return Subgradients{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, eta * s)};
  };
  detail::attach_select(sys);
  return sys;
}

/// Current source driving R, the backlash inductor and C in parallel:
/// x = (phi, Q), u = I, y = V = Q/C.
inline PHStructure build_parallel(const CircuitParams& cp) {
  cp.validate();
  PHStructure sys;
  sys.topology = Topology::parallel;
  sys.params = cp;
  sys.J = Eigen::Matrix2d{{0.0, 1.0}, {-1.0, 0.0}};
  sys.R = Eigen::Matrix2d{{0.0, 0.0}, {0.0, 1.0 / cp.R}};
  sys.G = Eigen::Vector2d(0.0, 1.0);
  sys.M = Eigen::MatrixXd::Zero(1, 1);
  sys.K = Eigen::MatrixXd::Zero(2, 1);
  detail::attach_energy(sys);
  const double eta = cp.backlash.offset_current();
  // The backlash is driven by the common voltage V = e(1).
  sys.potential = [eta](const auto&, const Eigen::VectorXd& e, const auto&) { return eta * std::abs(e(1)); };
  sys.switching_argument = [](const auto&, const Eigen::VectorXd& e, const auto&) { return e(1); };
  sys.subgradient = [eta](const auto&, const auto&, const auto&, double s) {
    return Subgradients{Eigen::Vector2d(0.0, eta * s), Eigen::VectorXd::Zero(1)};
  };
  detail::attach_select(sys);
  return sys;
}

/// Voltage source driving R, the backlash inductor and C in series:
/// x = (phi, Q), u = V, y = I = phi/L + (h/L) s.
/// With SeriesSign::inductor_voltage the selection is s in sign(phi'), where
/// phi' = z - R*eta*s and z = u - R*phi/L - Q/C; |z| <= R*eta sticks (phi' = 0).
inline PHStructure build_series(const CircuitParams& cp, SeriesSign sign = SeriesSign::source_voltage) {
  cp.validate();
  PHStructure sys;
  sys.topology = Topology::series;
  sys.params = cp;
  sys.series_sign = sign;
  sys.J = Eigen::Matrix2d{{0.0, -1.0}, {1.0, 0.0}};
  sys.R = Eigen::Matrix2d{{cp.R, 0.0}, {0.0, 0.0}};
  sys.G = Eigen::Vector2d(1.0, 0.0);
  sys.M = Eigen::MatrixXd::Zero(1, 1);
  sys.K = Eigen::Vector2d(cp.R, -1.0);
  detail::attach_energy(sys);
  const double eta = cp.backlash.offset_current();
  sys.potential = [eta](const auto&, const auto&, const Eigen::VectorXd& u) { return eta * std::abs(u(0)); };
  sys.subgradient = [eta](const auto&, const auto&, const auto&, double s) {
    return Subgradients{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(1, eta * s)};
  };
  if (sign == SeriesSign::source_voltage) {
    sys.switching_argument = [](const auto&, const auto&, const Eigen::VectorXd& u) { return u(0); };
  } else {
    const double R = cp.R;
    const double L = cp.backlash.L;
    sys.switching_argument = [R, L](const Eigen::VectorXd& x, const Eigen::VectorXd& e, const Eigen::VectorXd& u) {
      return u(0) - R * x(0) / L - e(1);
    };
    if (eta > 0.0) {
      sys.select = [R, L, eta](const Eigen::VectorXd& x, const Eigen::VectorXd& e, const Eigen::VectorXd& u) {
        const double z = u(0) - R * x(0) / L - e(1);
        return std::clamp(z / (R * eta), -1.0, 1.0);
      };
    }
  }
  detail::attach_select(sys);
  return sys;
}

inline double skew_defect(const Eigen::MatrixXd& A) { return (A + A.transpose()).cwiseAbs().maxCoeff(); }

/// Largest asymmetry of R and the most negative eigenvalue (0 if none).
inline std::pair<double, double> resistive_defect(const Eigen::MatrixXd& R) {
  const double asym = (R - R.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (R + R.transpose()));
  return {asym, std::min(0.0, es.eigenvalues().minCoeff())};
}

/// Structural invariants: J and M skew, R symmetric positive semidefinite.
inline CertificateReport check_structure(const PHStructure& sys, double tol = 1e-14) {
  CertificateReport report{.name = "structure", .tolerance = tol};
  report.record(0, 0.0, -skew_defect(sys.J), "J skew-symmetric");
  report.record(1, 0.0, -skew_defect(sys.M), "M skew-symmetric");
  const auto [asym, min_eig] = resistive_defect(sys.R);
  report.record(2, 0.0, -asym, "R symmetric");
  report.record(3, 0.0, min_eig, "R positive semidefinite");
  return report;
}

/// Samples e^T dP/de + u^T dP/du >= 0 at the given (x, u) points, with the
/// selection the model picks there.
/// The implicit series selection follows phi' rather than u, so it is not a
/// subgradient of (h/L)|u| and this condition can fail there; use
/// check_instantaneous_balance for that variant.
inline CertificateReport check_dissipation_condition(const PHStructure& sys, std::span<const Eigen::VectorXd> xs,
                                                     std::span<const Eigen::VectorXd> us, double tol = 0.0) {
  if (xs.size() != us.size()) throw std::invalid_argument("check_dissipation_condition: size mismatch");
  CertificateReport report{.name = "dissipation-condition", .tolerance = tol};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Eigen::VectorXd e = sys.gradient(xs[i]);
    const Subgradients dp = sys.subgradient(xs[i], e, us[i], sys.select(xs[i], e, us[i]));
    report.record(i, 0.0, e.dot(dp.dP_de) + us[i].dot(dp.dP_du), "e.dP/de + u.dP/du >= 0");
  }
  return report;
}

/// Samples the instantaneous balance u^T y - e^T x' >= 0. Expanded,
///   u^T y - e^T x' = e^T R e + e^T dP/de + (u + K^T e)^T dP/du,
/// so with K != 0 the condition on P alone is not enough for passivity.
inline CertificateReport check_instantaneous_balance(const PHStructure& sys, std::span<const Eigen::VectorXd> xs,
                                                     std::span<const Eigen::VectorXd> us, double tol = 0.0) {
  if (xs.size() != us.size()) throw std::invalid_argument("check_instantaneous_balance: size mismatch");
  CertificateReport report{.name = "instantaneous-balance", .tolerance = tol};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Eigen::VectorXd e = sys.gradient(xs[i]);
    const PHFlow f = sys.flow(xs[i], us[i], sys.select(xs[i], e, us[i]));
    report.record(i, 0.0, us[i].dot(f.y) - e.dot(f.x_dot), "u.y - e.x' >= 0");
  }
  return report;
}

}  // namespace bph
