#pragma once

// Source waveforms. Each waveform is split into segments at its discontinuities
// and kinks; inside a segment the value is generated by a small linear
// exosystem  w' = W w,  u = c^T w,  which lets affine circuit modes be
// propagated exactly with a matrix exponential.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bph {

enum class WaveformKind { constant, sine, square, piecewise_linear, prbs };

inline const char* to_string(WaveformKind k) {
  switch (k) {
    case WaveformKind::constant: return "constant";
    case WaveformKind::sine: return "sine";
    case WaveformKind::square: return "square";
    case WaveformKind::piecewise_linear: return "piecewise_linear";
    case WaveformKind::prbs: return "prbs";
  }
  return "?";
}

struct WaveformSpec {
  WaveformKind kind = WaveformKind::constant;
  double level = 0.0;      // constant
  double amplitude = 0.0;  // sine, square, prbs
  double frequency = 1.0;  // sine, square (Hz); prbs bit rate
  double phase = 0.0;      // radians; sine and square
  double offset = 0.0;     // added to sine, square, prbs
  std::vector<double> times;   // piecewise_linear breakpoints, strictly increasing, first at 0
  std::vector<double> values;  // piecewise_linear values at the breakpoints
  std::uint64_t seed = 0;      // prbs
  double horizon = 1.0;

  void validate() const {
    if (!(std::isfinite(horizon) && horizon > 0.0)) throw std::invalid_argument("waveform horizon must be > 0");
    auto finite = [](double v, const char* name) {
      if (!std::isfinite(v)) throw std::invalid_argument(std::string("waveform ") + name + " must be finite");
    };
    finite(level, "level");
    finite(amplitude, "amplitude");
    finite(phase, "phase");
    finite(offset, "offset");
    if (kind == WaveformKind::sine || kind == WaveformKind::square || kind == WaveformKind::prbs) {
      if (!(std::isfinite(frequency) && frequency > 0.0)) {
        throw std::invalid_argument("waveform frequency must be > 0");
      }
    }
    if (kind == WaveformKind::piecewise_linear) {
      if (times.empty() || times.size() != values.size()) {
        throw std::invalid_argument("piecewise_linear waveform needs matching, nonempty times and values");
      }
      if (times.front() != 0.0) throw std::invalid_argument("piecewise_linear times must start at 0");
      for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) {
          throw std::invalid_argument("piecewise_linear times must be strictly increasing");
        }
      }
      for (double v : values) finite(v, "value");
    }
  }
};

/// Linear generator of a waveform segment: u(t0 + tau) = c^T exp(W tau) w0.
/// The last component of w is always the constant 1.
struct Exosystem {
  Eigen::MatrixXd W;
  Eigen::VectorXd w0;
  Eigen::VectorXd c;
};

class Waveform {
 public:
  explicit Waveform(WaveformSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    build_segments();
  }

  const WaveformSpec& spec() const { return spec_; }
  double horizon() const { return spec_.horizon; }

  /// Segment boundaries, starting at 0 and ending at the horizon.
  const std::vector<double>& breakpoints() const { return breaks_; }

  /// Index of the segment containing t (right-continuous at boundaries).
  std::size_t segment(double t) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
    std::size_t idx = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
    return std::min(idx, breaks_.size() - 2);
  }

  double value(double t) const { return value_in(segment(t), t); }

  /// Value at t evaluated with the formula of a given segment, so that the
  /// left limit at a boundary can be read from the preceding segment.
  double value_in(std::size_t seg, double t) const {
    switch (spec_.kind) {
      case WaveformKind::constant: return spec_.level;
      case WaveformKind::sine: return spec_.offset + spec_.amplitude * std::sin(omega() * t + spec_.phase);
      case WaveformKind::square:
      case WaveformKind::prbs: return levels_[seg];
      case WaveformKind::piecewise_linear: {
        const auto& [t0, v0, slope] = ramps_[seg];
        return v0 + slope * (t - t0);
      }
    }
    return 0.0;
  }

  /// Generator of the segment containing t, started at t. Source levels live in
  /// w0 rather than W or c, so segments of one waveform share (W, c).
  Exosystem exosystem(double t) const { return exosystem(segment(t), t); }

  /// Same, with the segment given explicitly (t may sit on its right end).
  Exosystem exosystem(std::size_t seg, double t) const {
    Exosystem e;
    switch (spec_.kind) {
      case WaveformKind::sine: {
        const double w = omega();
        const double theta = w * t + spec_.phase;
        e.W = Eigen::MatrixXd::Zero(3, 3);
        e.W(0, 1) = w;
        e.W(1, 0) = -w;
        e.w0 = Eigen::Vector3d(std::sin(theta), std::cos(theta), 1.0);
        e.c = Eigen::Vector3d(spec_.amplitude, 0.0, spec_.offset);
        return e;
      }
      case WaveformKind::piecewise_linear: {
        // w = (u, slope, 1), u' = slope.
        e.W = Eigen::MatrixXd::Zero(3, 3);
        e.W(0, 1) = 1.0;
        e.w0 = Eigen::Vector3d(value_in(seg, t), ramps_[seg].slope, 1.0);
        e.c = Eigen::Vector3d(1.0, 0.0, 0.0);
        return e;
      }
      default:
        // w = (u, 1).
        e.W = Eigen::MatrixXd::Zero(2, 2);
        e.w0 = Eigen::Vector2d(value_in(seg, t), 1.0);
        e.c = Eigen::Vector2d(1.0, 0.0);
        return e;
    }
  }

 private:
  struct Ramp {
    double t0;
    double v0;
    double slope;
  };

  double omega() const { return 2.0 * std::numbers::pi * spec_.frequency; }

  void build_segments() {
    const double T = spec_.horizon;
    breaks_ = {0.0};
    switch (spec_.kind) {
      case WaveformKind::constant:
      case WaveformKind::sine: break;
      case WaveformKind::square: {
        // Level flips where f*t + phase/(2 pi) crosses a multiple of 1/2.
        const double shift = spec_.phase / (2.0 * std::numbers::pi);
        const auto k0 = static_cast<long long>(std::floor(2.0 * shift)) + 1;
        for (long long k = k0;; ++k) {
          const double t = (0.5 * static_cast<double>(k) - shift) / spec_.frequency;
          if (t >= T) break;
          if (t > 0.0) breaks_.push_back(t);
        }
        break;
      }
      case WaveformKind::prbs: {
        std::mt19937_64 gen(spec_.seed);
        const double bit = 1.0 / spec_.frequency;
        int previous = 0;
        for (long long k = 0;; ++k) {
          const double t = static_cast<double>(k) * bit;
          if (t >= T) break;
          const int b = (gen() >> 63) != 0 ? 1 : -1;
          if (k == 0) {
            previous = b;
            levels_.push_back(spec_.offset + spec_.amplitude * b);
          } else if (b != previous) {
            previous = b;
            breaks_.push_back(t);
            levels_.push_back(spec_.offset + spec_.amplitude * b);
          }
        }
        break;
      }
      case WaveformKind::piecewise_linear: {
        for (std::size_t i = 1; i < spec_.times.size() && spec_.times[i] < T; ++i) breaks_.push_back(spec_.times[i]);
        for (std::size_t i = 0; i < breaks_.size(); ++i) {
          const double t0 = spec_.times[i];
          const double v0 = spec_.values[i];
          const double slope = i + 1 < spec_.times.size()
                                   ? (spec_.values[i + 1] - v0) / (spec_.times[i + 1] - t0)
                                   : 0.0;
          ramps_.push_back({t0, v0, slope});
        }
        break;
      }
    }
    breaks_.push_back(T);
    if (spec_.kind == WaveformKind::square) {
      const double shift = spec_.phase / (2.0 * std::numbers::pi);
      for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
        const double mid = 0.5 * (breaks_[i] + breaks_[i + 1]);
        const double pos = spec_.frequency * mid + shift;
        const double frac = pos - std::floor(pos);
        levels_.push_back(spec_.offset + (frac < 0.5 ? spec_.amplitude : -spec_.amplitude));
      }
    }
  }

  WaveformSpec spec_;
  std::vector<double> breaks_;
  std::vector<double> levels_;
  std::vector<Ramp> ramps_;
};

}  // namespace bph
