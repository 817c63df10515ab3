#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace bph {

/// A single failed inequality inside a certificate.
struct Violation {
  std::size_t index = 0;  // grid point or sample interval
  double where = 0.0;     // flux value or time, depending on the check
  double margin = 0.0;    // negative: amount by which the bound was violated
  std::string what;
};

/// Outcome of a numerical certificate. A margin is the slack of the checked
/// inequality; `pass` holds iff the worst margin is >= -tolerance.
struct CertificateReport {
  std::string name;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  std::size_t checked = 0;
  std::vector<Violation> violations;

  void record(std::size_t index, double where, double margin, const char* what) {
    ++checked;
    if (margin < worst_margin) worst_margin = margin;
    if (margin < -tolerance) {
      pass = false;
      violations.push_back({index, where, margin, what});
    }
  }
};

}  // namespace bph
