#pragma once

// Event-driven simulation of the backlash element and its RLC networks.
//
// Between sign switches every topology is affine in its state,
//   x' = A x + b u(t) + c,
// so the integrator works mode by mode. A mode fixes how the sign selection is
// formed (a constant +-1, a held value, a Filippov sliding selection, a stick
// selection, or the linear band of the regularized sign) and carries a guard
// that stays >= 0 while the mode is valid. Guard crossings are located by
// bisection; waveform breakpoints are always step boundaries.
//
// Within a mode the state is advanced either exactly (matrix exponential of
// the state augmented with the source's exosystem, ledger by Gauss-Legendre
// quadrature) or with classical RK4 on the state augmented with the ledger
// integrals.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bph/backlash.hpp"
#include "bph/ph_structure.hpp"
#include "bph/trajectory.hpp"
#include "bph/waveform.hpp"

namespace bph {

struct SolverOptions {
  double dt = 1e-2;
  double ev_tol = 0.0;  // <= 0 selects 1e-10 * horizon
  double v_tol = 0.0;   // dead band of the source-driven sign
  bool exact = false;   // RK4 within modes; true selects exact affine propagation
  std::optional<double> regularization;  // epsilon of sign(v) ~ v / max(|v|, epsilon)
  int max_bisection = 200;
  int max_events_per_step = 1000;

  void validate() const {
    if (!(std::isfinite(dt) && dt > 0.0)) throw std::invalid_argument("solver dt must be > 0");
    if (!(std::isfinite(ev_tol) && ev_tol >= 0.0)) throw std::invalid_argument("solver ev_tol must be >= 0");
    if (!(std::isfinite(v_tol) && v_tol >= 0.0)) throw std::invalid_argument("solver v_tol must be >= 0");
    if (regularization && !(std::isfinite(*regularization) && *regularization > 0.0)) {
      throw std::invalid_argument("solver regularization epsilon must be > 0");
    }
    if (max_bisection < 1 || max_events_per_step < 1) throw std::invalid_argument("solver iteration caps must be >= 1");
  }
};

struct CircuitState {
  double phi = 0.0;
  double Q = 0.0;
  SignSelection s;
};

class SimulationError : public std::runtime_error {
 public:
  enum class Kind { event_bisection, too_many_events, divergence };

  SimulationError(Kind kind, const std::string& what, TrajectoryRecord partial, double t_lo = 0.0, double t_hi = 0.0)
      : std::runtime_error(what), kind_(kind), partial_(std::move(partial)), bracket_{t_lo, t_hi} {}

  Kind kind() const { return kind_; }
  const TrajectoryRecord& partial() const { return partial_; }
  std::pair<double, double> bracket() const { return bracket_; }

 private:
  Kind kind_;
  TrajectoryRecord partial_;
  std::pair<double, double> bracket_;
};

namespace detail {

enum class ModeKind { fixed, hold, sliding, stick, band };

struct Mode {
  ModeKind kind = ModeKind::hold;
  double s = 0.0;  // selection for fixed and hold modes
};

struct AffineField {
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
};

struct Rates {
  double supplied = 0.0;
  double resistive = 0.0;
  double hysteretic = 0.0;
};

struct Outputs {
  double V = 0.0;
  double I = 0.0;
  double I_L = 0.0;
  double s = 0.0;
  Eigen::Vector2d x_dot = Eigen::Vector2d::Zero();
};

/// Mode logic of one topology. State is always (phi, Q); the element keeps Q = 0.
class SwitchedNetwork {
 public:
  SwitchedNetwork(const PHStructure& sys, const SolverOptions& opt)
      : topo_(sys.topology),
        series_sign_(sys.series_sign),
        L_(sys.params.backlash.L),
        h_(sys.params.backlash.h),
        R_(sys.params.R),
        C_(sys.params.C),
        eta_(sys.params.backlash.offset_current()),
        v_tol_(opt.v_tol),
        eps_(opt.regularization) {}

  /// With h = 0 the selection never influences the dynamics.
  bool switching() const { return h_ > 0.0; }
  bool regularized() const { return eps_.has_value(); }

  Mode classify(const Eigen::Vector2d& x, double u, const Mode& prev) const {
    if (!switching()) return {ModeKind::fixed, prev.s};
    const double prev_s = selection_value(prev, x, u);
    if (regularized()) {
      const double v = regularized_argument(x, u);
      const double band = band_halfwidth();
      if (std::abs(v) <= band) return {ModeKind::band, 0.0};
      return {ModeKind::fixed, v > 0.0 ? 1.0 : -1.0};
    }
    switch (topo_) {
      case Topology::element: return source_driven(u, prev_s);
      case Topology::parallel: {
        const double V = x(1) / C_;
        if (V > v_tol_) return {ModeKind::fixed, 1.0};
        if (V < -v_tol_) return {ModeKind::fixed, -1.0};
        return surface(x, u);
      }
      case Topology::series: {
        if (series_sign_ == SeriesSign::source_voltage) return source_driven(u, prev_s);
        const double z = drive(x, u);
        if (z > R_ * eta_) return {ModeKind::fixed, 1.0};
        if (z < -R_ * eta_) return {ModeKind::fixed, -1.0};
        return {ModeKind::stick, 0.0};
      }
    }
    return prev;
  }

  /// Called right after a guard crossing. The parallel circuit's state is put
  /// back onto its switching surface Q = 0 before the new mode is chosen.
  Mode on_event(const Mode& m, Eigen::Vector2d& x, double u) const {
    if (topo_ == Topology::parallel && !regularized() && m.kind == ModeKind::fixed) {
      x(1) = 0.0;
      return surface(x, u);
    }
    return classify(x, u, m);
  }

  double guard(const Mode& m, const Eigen::Vector2d& x, double u) const {
    if (!switching()) return 1.0;
    if (regularized()) {
      const double v = regularized_argument(x, u);
      const double band = band_halfwidth();
      return m.kind == ModeKind::band ? band - std::abs(v) : m.s * v - band;
    }
    switch (topo_) {
      case Topology::element: return source_guard(m, u);
      case Topology::parallel:
        if (m.kind == ModeKind::sliding) return eta_ - std::abs(u - x(0) / L_);
        return m.s * x(1);
      case Topology::series: {
        if (series_sign_ == SeriesSign::source_voltage) return source_guard(m, u);
        const double z = drive(x, u);
        if (m.kind == ModeKind::stick) return R_ * eta_ - std::abs(z);
        return m.s * z - R_ * eta_;
      }
    }
    return 1.0;
  }

  double selection_value(const Mode& m, const Eigen::Vector2d& x, double u) const {
    switch (m.kind) {
      case ModeKind::fixed:
      case ModeKind::hold: return m.s;
      case ModeKind::sliding: return std::clamp((L_ * u - x(0)) / h_, -1.0, 1.0);
      case ModeKind::stick: return std::clamp(drive(x, u) / (R_ * eta_), -1.0, 1.0);
      case ModeKind::band: {
        if (topo_ == Topology::series && series_sign_ == SeriesSign::inductor_voltage) {
          return band_gain() * drive(x, u) / *eps_;
        }
        return regularized_argument(x, u) / *eps_;
      }
    }
    return 0.0;
  }

  AffineField field(const Mode& m) const {
    AffineField f;
    switch (topo_) {
      case Topology::element: f.b(0) = 1.0; break;
      case Topology::parallel:
        if (m.kind == ModeKind::sliding) break;
        f.A << 0.0, 1.0 / C_, -1.0 / L_, -1.0 / (R_ * C_);
        f.b(1) = 1.0;
        if (m.kind == ModeKind::band) {
          f.A(1, 1) -= eta_ / (C_ * *eps_);
        } else {
          f.c(1) = -eta_ * m.s;
        }
        break;
      case Topology::series:
        if (m.kind == ModeKind::stick) {
          f.A(1, 1) = -1.0 / (R_ * C_);
          f.b(1) = 1.0 / R_;
        } else if (m.kind == ModeKind::band && series_sign_ == SeriesSign::inductor_voltage) {
          // phi' = k z, s = phi'/eps with z = u - R phi/L - Q/C and k = 1/(1 + R eta/eps).
          const double k = band_gain();
          const double g = eta_ / *eps_;
          f.A << -k * R_ / L_, -k / C_, 1.0 / L_ - g * k * R_ / L_, -g * k / C_;
          f.b << k, g * k;
        } else {
          f.A << -R_ / L_, -1.0 / C_, 1.0 / L_, 0.0;
          if (m.kind == ModeKind::band) {
            f.b << 1.0 - R_ * eta_ / *eps_, eta_ / *eps_;
          } else {
            f.b(0) = 1.0;
            f.c << -R_ * eta_ * m.s, eta_ * m.s;
          }
        }
        break;
    }
    return f;
  }

  Outputs outputs(const Mode& m, const Eigen::Vector2d& x, double u) const {
    Outputs o;
    o.s = selection_value(m, x, u);
    const AffineField f = field(m);
    o.x_dot = f.A * x + f.b * u + f.c;
    o.I_L = x(0) / L_ + eta_ * o.s;
    if (topo_ == Topology::parallel) {
      o.V = x(1) / C_;
      o.I = u;
    } else {
      o.V = u;
      o.I = o.I_L;
    }
    return o;
  }

  Rates rates(const Mode& m, const Eigen::Vector2d& x, double u) const {
    const Outputs o = outputs(m, x, u);
    Rates r;
    switch (topo_) {
      case Topology::element:
        r.supplied = u * o.I;
        r.hysteretic = eta_ * o.s * u;
        break;
      case Topology::parallel:
        r.supplied = u * o.V;
        r.resistive = o.V * o.V / R_;
        r.hysteretic = eta_ * o.s * o.V;
        break;
      case Topology::series:
        // The backlash element dissipates through its own port voltage phi'.
        r.supplied = u * o.I;
        r.resistive = R_ * o.I * o.I;
        r.hysteretic = eta_ * o.s * o.x_dot(0);
        break;
    }
    return r;
  }

 private:
  Mode source_driven(double u, double prev_s) const {
    if (u > v_tol_) return {ModeKind::fixed, 1.0};
    if (u < -v_tol_) return {ModeKind::fixed, -1.0};
    return {ModeKind::hold, prev_s};
  }

  double source_guard(const Mode& m, double u) const {
    if (m.kind == ModeKind::hold) return v_tol_ - std::abs(u);
    return m.s * u - v_tol_;
  }

  /// Filippov rule on Q = 0: cross if both one-sided charge rates agree in
  /// sign, otherwise slide with phi and Q frozen.
  Mode surface(const Eigen::Vector2d& x, double u) const {
    const double up = u - x(0) / L_ - eta_;
    const double down = u - x(0) / L_ + eta_;
    if (up > 0.0) return {ModeKind::fixed, 1.0};
    if (down < 0.0) return {ModeKind::fixed, -1.0};
    return {ModeKind::sliding, 0.0};
  }

  /// Voltage left for R and the backlash in the series loop.
  double drive(const Eigen::Vector2d& x, double u) const { return u - R_ * x(0) / L_ - x(1) / C_; }

  double regularized_argument(const Eigen::Vector2d& x, double u) const {
    switch (topo_) {
      case Topology::element: return u;
      case Topology::parallel: return x(1) / C_;
      case Topology::series: return series_sign_ == SeriesSign::source_voltage ? u : drive(x, u);
    }
    return u;
  }

  /// Half-width of the linear band measured in the regularized argument.
  double band_halfwidth() const {
    if (topo_ == Topology::series && series_sign_ == SeriesSign::inductor_voltage) return *eps_ + R_ * eta_;
    return *eps_;
  }

  double band_gain() const { return 1.0 / (1.0 + R_ * eta_ / *eps_); }

  Topology topo_;
  SeriesSign series_sign_;
  double L_, h_, R_, C_, eta_, v_tol_;
  std::optional<double> eps_;
};

/// State plus accumulated ledger integrals.
struct FlowState {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  double supplied = 0.0;
  double resistive = 0.0;
  double hysteretic = 0.0;
};

/// Advances one mode over [t0, t0 + tau] within a single waveform segment.
class ModePropagator {
 public:
  ModePropagator(const SwitchedNetwork& net, const Waveform& wf, bool exact) : net_(net), wf_(wf), exact_(exact) {}

  /// With `ledger` false only the state is advanced (used by event bisection).
  FlowState advance(const Mode& m, std::size_t seg, double t0, const FlowState& s0, double tau, bool ledger = true) {
    if (tau <= 0.0) return s0;
    return exact_ ? advance_exact(m, seg, t0, s0, tau, ledger) : advance_rk4(m, seg, t0, s0, tau);
  }

 private:
  FlowState advance_rk4(const Mode& m, std::size_t seg, double t0, const FlowState& s0, double tau) const {
    const AffineField f = net_.field(m);
    using Vec5 = Eigen::Matrix<double, 5, 1>;
    auto rhs = [&](double t, const Vec5& z) {
      const Eigen::Vector2d x = z.head<2>();
      const double u = wf_.value_in(seg, t);
      const Rates r = net_.rates(m, x, u);
      Vec5 d;
      d.head<2>() = f.A * x + f.b * u + f.c;
      d(2) = r.supplied;
      d(3) = r.resistive;
      d(4) = r.hysteretic;
      return d;
    };
    Vec5 z;
    z << s0.x, s0.supplied, s0.resistive, s0.hysteretic;
    const Vec5 k1 = rhs(t0, z);
    const Vec5 k2 = rhs(t0 + 0.5 * tau, z + 0.5 * tau * k1);
    const Vec5 k3 = rhs(t0 + 0.5 * tau, z + 0.5 * tau * k2);
    const Vec5 k4 = rhs(t0 + tau, z + tau * k3);
    const Vec5 out = z + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return {out.head<2>(), out(2), out(3), out(4)};
  }

  FlowState advance_exact(const Mode& m, std::size_t seg, double t0, const FlowState& s0, double tau, bool ledger) {
    // Five-point Gauss-Legendre nodes and weights on [0, 1].
    static constexpr std::array<double, 5> nodes = {0.04691007703066802, 0.23076534494715845, 0.5,
                                                    0.76923465505284155, 0.95308992296933198};
    static constexpr std::array<double, 5> weights = {0.11846344252809454, 0.23931433524968324,
                                                      0.28444444444444444, 0.23931433524968324,
                                                      0.11846344252809454};
    const Exosystem exo = wf_.exosystem(seg, t0);
    const Eigen::Index k = exo.W.rows();
    const AffineField f = net_.field(m);
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 + k, 2 + k);
    big.topLeftCorner<2, 2>() = f.A;
    big.topRightCorner(2, k) = f.b * exo.c.transpose();
    big.block(0, 1 + k, 2, 1) += f.c;  // last exosystem component is the constant 1
    big.bottomRightCorner(k, k) = exo.W;
    Eigen::VectorXd xi0(2 + k);
    xi0 << s0.x, exo.w0;

    if (!ledger) {
      FlowState out = s0;
      out.x = ((big * tau).exp() * xi0).head<2>();
      return out;
    }
    const auto& E = exponentials(big, tau, nodes);
    FlowState out = s0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const Eigen::VectorXd xi = E[i] * xi0;
      const Eigen::Vector2d x = xi.head<2>();
      const double u = exo.c.dot(xi.tail(k));
      const Rates r = net_.rates(m, x, u);
      out.supplied += weights[i] * tau * r.supplied;
      out.resistive += weights[i] * tau * r.resistive;
      out.hysteretic += weights[i] * tau * r.hysteretic;
    }
    out.x = (E[nodes.size()] * xi0).head<2>();
    return out;
  }

  /// exp(big * tau * node_i) for each quadrature node, then exp(big * tau).
  const std::vector<Eigen::MatrixXd>& exponentials(const Eigen::MatrixXd& big, double tau,
                                                   const std::array<double, 5>& nodes) {
    if (cached_tau_ == tau && cached_matrix_.rows() == big.rows() && cached_matrix_ == big) return cached_;
    cached_.clear();
    for (double nd : nodes) cached_.push_back((big * (tau * nd)).exp());
    cached_.push_back((big * tau).exp());
    cached_matrix_ = big;
    cached_tau_ = tau;
    return cached_;
  }

  const SwitchedNetwork& net_;
  const Waveform& wf_;
  bool exact_;
  Eigen::MatrixXd cached_matrix_;
  double cached_tau_ = -1.0;
  std::vector<Eigen::MatrixXd> cached_;
};

inline bool finite_state(const Eigen::Vector2d& x) {
  return std::isfinite(x(0)) && std::isfinite(x(1)) && std::abs(x(0)) < 1e150 && std::abs(x(1)) < 1e150;
}

}  // namespace detail

/// Simulates `sys` from `x0` under the source `input` up to its horizon.
///
/// Samples are written at every multiple of dt, at every waveform breakpoint and
/// at every sign switch; switch samples carry the current just before the
/// switch in I_L_before / I_before.
inline TrajectoryRecord simulate(const PHStructure& sys, const CircuitState& x0, const WaveformSpec& input,
                                 const SolverOptions& opt) {
  using detail::FlowState;
  using detail::Mode;
  sys.params.backlash.validate();
  opt.validate();
  const Waveform wf(input);
  const double T = wf.horizon();
  if (!(std::isfinite(x0.phi) && std::isfinite(x0.Q))) throw std::invalid_argument("initial state must be finite");

  const detail::SwitchedNetwork net(sys, opt);
  detail::ModePropagator prop(net, wf, opt.exact);
  const double ev_tol = opt.ev_tol > 0.0 ? opt.ev_tol : 1e-10 * T;
  const bool element = sys.topology == Topology::element;

  // Step boundaries: the dt grid merged with waveform breakpoints; a breakpoint
  // closer than a tiny fraction of dt to a grid point replaces it.
  std::vector<double> stops;
  {
    const auto n = static_cast<long long>(std::ceil(T / opt.dt - 1e-9));
    for (long long k = 1; k <= n; ++k) stops.push_back(std::min(static_cast<double>(k) * opt.dt, T));
    const double snap = 1e-9 * opt.dt;
    for (double bp : wf.breakpoints()) {
      if (bp <= 0.0 || bp >= T) continue;
      auto it = std::lower_bound(stops.begin(), stops.end(), bp);
      if (it != stops.end() && std::abs(*it - bp) <= snap) {
        *it = bp;
      } else if (it != stops.begin() && std::abs(*(it - 1) - bp) <= snap) {
        *(it - 1) = bp;
      } else {
        stops.insert(it, bp);
      }
    }
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  }

  auto energy = [&](const Eigen::Vector2d& x) {
    Eigen::VectorXd xv = element ? Eigen::VectorXd::Constant(1, x(0)) : Eigen::VectorXd(x);
    return sys.hamiltonian(xv);
  };

  TrajectoryRecord record;
  record.topology = sys.topology;

  FlowState st;
  st.x = Eigen::Vector2d(x0.phi, element ? 0.0 : x0.Q);
  const double H0 = energy(st.x);

  auto make_sample = [&](double t, const Mode& m, const FlowState& s, double u) {
    const detail::Outputs o = net.outputs(m, s.x, u);
    Sample smp;
    smp.t = t;
    smp.V = o.V;
    smp.I = o.I;
    smp.I_L = o.I_L;
    smp.phi = s.x(0);
    smp.Q = s.x(1);
    smp.s = o.s;
    smp.phi_dot = o.x_dot(0);
    smp.Q_dot = o.x_dot(1);
    smp.ledger.H = energy(s.x);
    smp.ledger.supplied = s.supplied;
    smp.ledger.resistive = s.resistive;
    smp.ledger.hysteretic = s.hysteretic;
    smp.ledger.residual = smp.ledger.H - H0 - s.supplied + s.resistive + s.hysteretic;
    return smp;
  };
  // Appends a sample; a switch is recorded when the branch current jumps.
  auto push = [&](Sample smp, std::optional<detail::Outputs> before) {
    if (before && (before->I_L != smp.I_L || before->I != smp.I)) {
      smp.I_L_before = before->I_L;
      smp.I_before = before->I;
    }
    if (!record.samples.empty() && record.samples.back().t == smp.t) {
      auto& last = record.samples.back();
      if (last.I_L_before) {
        smp.I_L_before = last.I_L_before;
        smp.I_before = last.I_before;
      }
      last = smp;
    } else {
      record.samples.push_back(smp);
    }
  };

  Mode mode{detail::ModeKind::hold, x0.s.value()};
  {
    const double u0 = wf.value(0.0);
    const detail::Outputs before = net.outputs(mode, st.x, u0);
    mode = net.classify(st.x, u0, mode);
    push(make_sample(0.0, mode, st, u0), before);
  }

  double t = 0.0;
  for (double t_stop : stops) {
    const std::size_t seg = wf.segment(t);
    int events = 0;
    while (t < t_stop) {
      const double tau = t_stop - t;
      FlowState next = prop.advance(mode, seg, t, st, tau);
      if (!detail::finite_state(next.x)) {
        throw SimulationError(SimulationError::Kind::divergence,
                              "state diverged near t = " + std::to_string(t_stop), record, t, t_stop);
      }
      if (net.guard(mode, next.x, wf.value_in(seg, t_stop)) >= 0.0) {
        st = next;
        t = t_stop;
        break;
      }
      // Bracket the first guard crossing: guard >= 0 at lo, < 0 at hi.
      double lo = 0.0;
      double hi = tau;
      if (net.guard(mode, st.x, wf.value_in(seg, t)) < 0.0) hi = 0.0;
      int iter = 0;
      while (hi - lo > ev_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const FlowState probe = prop.advance(mode, seg, t, st, mid, false);
        if (net.guard(mode, probe.x, wf.value_in(seg, t + mid)) < 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
        if (++iter > opt.max_bisection) {
          throw SimulationError(SimulationError::Kind::event_bisection, "event location did not converge", record,
                                t + lo, t + hi);
        }
      }
      st = prop.advance(mode, seg, t, st, hi);
      t = hi >= tau ? t_stop : t + hi;
      const double u = wf.value_in(seg, t);
      const detail::Outputs before = net.outputs(mode, st.x, u);
      mode = net.on_event(mode, st.x, u);
      push(make_sample(t, mode, st, u), before);
      if (++events > opt.max_events_per_step) {
        throw SimulationError(SimulationError::Kind::too_many_events,
                              "too many sign switches within one step near t = " + std::to_string(t), record, t,
                              t_stop);
      }
    }
    // Breakpoints and grid points: re-read the source from the right.
    const double u_left = wf.value_in(seg, t);
    const double u_right = wf.value(t);
    const detail::Outputs before = net.outputs(mode, st.x, u_left);
    if (t < T) mode = net.classify(st.x, u_right, mode);
    push(make_sample(t, mode, st, t < T ? u_right : u_left), before);
  }
  return record;
}

}  // namespace bph
