#pragma once

// Backlash (hysteretic) inductor element.
//
// The element lives in the (I, phi) plane. Flux integrates the port voltage,
// phi' = V, and the current is the linear-inductor current plus a feedthrough
// offset selected from the multivalued sign of V:
//
//   I = phi / L + (h / L) * s,   s in sign(V) = {-1}, [-1, 1], {+1}.
//
// The feedthrough term is the subgradient of P(V) = (h / L) |V| and is the
// only source of dissipation in the element.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace bph {

struct BacklashParams {
  double L = 1.0;  // inductance, flux per current
  double h = 0.0;  // half-width of the characteristic, flux units

  /// Throws std::invalid_argument unless L > 0 and h >= 0 (both finite).
  void validate() const {
    if (!(std::isfinite(L) && L > 0.0)) {
      throw std::invalid_argument("backlash parameter L must be finite and > 0, got " + std::to_string(L));
    }
    if (!(std::isfinite(h) && h >= 0.0)) {
      throw std::invalid_argument("backlash parameter h must be finite and >= 0, got " + std::to_string(h));
    }
  }

  /// Feedthrough gain h / L, which has units of current.
  double offset_current() const { return h / L; }
};

/// A selection from the multivalued sign, always within [-1, 1].
class SignSelection {
 public:
  constexpr SignSelection() = default;
  explicit SignSelection(double s) : value_(s) {
    if (!(s >= -1.0 && s <= 1.0)) {
      throw std::invalid_argument("sign selection must lie in [-1, 1], got " + std::to_string(s));
    }
  }

  static SignSelection clamped(double s) { return SignSelection(std::clamp(s, -1.0, 1.0)); }

  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }

 private:
  double value_ = 0.0;
};

struct BacklashState {
  double phi = 0.0;
  SignSelection s;
};

/// +1 above the dead band, -1 below it, otherwise hold the previous selection.
inline SignSelection sign_select(double V, SignSelection s_prev, double v_tol = 0.0) {
  if (V > v_tol) return SignSelection(1.0);
  if (V < -v_tol) return SignSelection(-1.0);
  return s_prev;
}

inline double output_current(double phi, SignSelection s, const BacklashParams& p) {
  return phi / p.L + p.offset_current() * s.value();
}

/// Magnetic energy of the underlying linear inductor, phi^2 / (2L).
inline double hamiltonian_bf(double phi, const BacklashParams& p) { return phi * phi / (2.0 * p.L); }

/// P(V) = (h/L)|V|.
inline double dissipation_potential(double V, const BacklashParams& p) {
  return p.offset_current() * std::abs(V);
}

/// Advances the flux under a voltage held constant over the step.
inline BacklashState step_flux(const BacklashState& state, double V, double dt, double v_tol = 0.0) {
  if (!(dt >= 0.0)) throw std::invalid_argument("step_flux: dt must be >= 0");
  return BacklashState{state.phi + V * dt, sign_select(V, state.s, v_tol)};
}

/// Selection implied by an initial current, or 0 when none is supplied.
///
/// The current must satisfy |L*I0 - phi0| <= h (up to a small relative slack);
/// with h = 0 the selection is irrelevant and is set to 0.
inline SignSelection initial_selection(double phi0, std::optional<double> I0, const BacklashParams& p) {
  if (!I0) return SignSelection{};
  const double gap = p.L * *I0 - phi0;
  const double slack = 1e-12 * std::max({1.0, std::abs(phi0), p.h});
  if (std::abs(gap) > p.h + slack) {
    throw std::invalid_argument("initial current lies outside the backlash characteristic: |L*I0 - phi0| = " +
                                std::to_string(std::abs(gap)) + " > h = " + std::to_string(p.h));
  }
  if (p.h == 0.0) return SignSelection{};
  return SignSelection::clamped(gap / p.h);
}

}  // namespace bph
