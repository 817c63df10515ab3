#include <gtest/gtest.h>

#include <cmath>

#include "bph/backlash.hpp"
#include "bph/ph_structure.hpp"
#include "bph/simulate.hpp"
#include "support.hpp"

using namespace bph;

namespace {

SolverOptions exact_solver(double dt) {
  SolverOptions o;
  o.dt = dt;
  o.exact = true;
  return o;
}

WaveformSpec pwl(std::vector<double> times, std::vector<double> values) {
  WaveformSpec w;
  w.kind = WaveformKind::piecewise_linear;
  w.horizon = times.back();
  w.times = std::move(times);
  w.values = std::move(values);
  return w;
}

// Integral of |v| over a linear segment from a to b of length dt.
double abs_integral(double a, double b, double dt) {
  if (a * b >= 0.0) return 0.5 * (std::abs(a) + std::abs(b)) * dt;
  return 0.5 * (a * a + b * b) / std::abs(a - b) * dt;
}

}  // namespace

TEST(SignSelect, Examples) {
  EXPECT_EQ(sign_select(2.0, SignSelection(-1.0)).value(), 1.0);
  EXPECT_EQ(sign_select(0.0, SignSelection(0.3)).value(), 0.3);
  EXPECT_EQ(sign_select(-1e-12, SignSelection(1.0), 1e-9).value(), 1.0);
  EXPECT_EQ(sign_select(-2.0, SignSelection(1.0)).value(), -1.0);
}

TEST(SignSelect, DeadBandEdges) {
  EXPECT_EQ(sign_select(1e-9, SignSelection(-1.0), 1e-9).value(), -1.0);
  EXPECT_EQ(sign_select(2e-9, SignSelection(-1.0), 1e-9).value(), 1.0);
  EXPECT_EQ(sign_select(-2e-9, SignSelection(0.5), 1e-9).value(), -1.0);
}

TEST(SignSelection, RejectsOutOfRange) {
  EXPECT_THROW(SignSelection(1.5), std::invalid_argument);
  EXPECT_THROW(SignSelection(std::nan("")), std::invalid_argument);
  EXPECT_EQ(SignSelection::clamped(-4.0).value(), -1.0);
}

TEST(OutputCurrent, Examples) {
  EXPECT_EQ(output_current(0.0, SignSelection(0.0), {.L = 1.0, .h = 0.5}), 0.0);
  EXPECT_EQ(output_current(0.0, SignSelection(1.0), {.L = 1.0, .h = 0.5}), 0.5);
  EXPECT_EQ(output_current(2.0, SignSelection(-1.0), {.L = 2.0, .h = 1.0}), 0.5);
}

TEST(Hamiltonian, Examples) {
  EXPECT_EQ(hamiltonian_bf(0.0, {.L = 1.0}), 0.0);
  EXPECT_EQ(hamiltonian_bf(1.0, {.L = 1.0}), 0.5);
  EXPECT_EQ(hamiltonian_bf(-3.0, {.L = 2.0}), 2.25);
}

TEST(DissipationPotential, Examples) {
  EXPECT_EQ(dissipation_potential(0.0, {.L = 1.0, .h = 1.0}), 0.0);
  EXPECT_EQ(dissipation_potential(-2.0, {.L = 1.0, .h = 0.5}), 1.0);
  EXPECT_EQ(dissipation_potential(3.0, {.L = 3.0, .h = 3.0}), 3.0);
}

TEST(StepFlux, Examples) {
  auto a = step_flux({0.0, SignSelection(0.0)}, 1.0, 0.5);
  EXPECT_EQ(a.phi, 0.5);
  EXPECT_EQ(a.s.value(), 1.0);
  auto b = step_flux({1.0, SignSelection(1.0)}, 0.0, 10.0);
  EXPECT_EQ(b.phi, 1.0);
  EXPECT_EQ(b.s.value(), 1.0);
  auto c = step_flux({0.25, SignSelection(1.0)}, -1.0, 0.25);
  EXPECT_EQ(c.phi, 0.0);
  EXPECT_EQ(c.s.value(), -1.0);
  EXPECT_THROW(step_flux({}, 1.0, -0.1), std::invalid_argument);
}

TEST(Params, Validation) {
  EXPECT_THROW((BacklashParams{.L = 0.0, .h = 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((BacklashParams{.L = 1.0, .h = -0.1}).validate(), std::invalid_argument);
  EXPECT_THROW((BacklashParams{.L = INFINITY, .h = 0.1}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((BacklashParams{.L = 2.0, .h = 0.0}).validate());
}

TEST(InitialSelection, FromCurrent) {
  const BacklashParams p{.L = 2.0, .h = 1.0};
  EXPECT_EQ(initial_selection(0.0, std::nullopt, p).value(), 0.0);
  EXPECT_DOUBLE_EQ(initial_selection(1.0, 0.75, p).value(), 0.5);
  EXPECT_THROW(initial_selection(0.0, 1.0, p), std::invalid_argument);
}

// I - phi/L stays inside [-h/L, h/L], i.e. |L I - phi| <= h, everywhere.
TEST(ElementProperties, ConfinementAndNonnegativeFeedthrough) {
  bph_test::SplitMix rng(11);
  for (int run = 0; run < 20; ++run) {
    const BacklashParams p{.L = rng.uniform(0.5, 2.0), .h = rng.uniform(0.0, 1.0)};
    std::vector<double> t{0.0}, v{rng.uniform(-2, 2)};
    for (int k = 0; k < 12; ++k) {
      t.push_back(t.back() + rng.uniform(0.1, 1.0));
      v.push_back(k % 4 == 3 ? 0.0 : rng.uniform(-2, 2));
    }
    const auto traj = simulate(build_backlash_element(p), {}, pwl(t, v), exact_solver(0.01));
    for (const auto& s : traj.samples) {
      EXPECT_LE(std::abs(p.L * s.I - s.phi), p.h * (1 + 1e-12) + 1e-12);
      EXPECT_GE(s.V * (s.I - s.phi / p.L), -1e-15);
    }
  }
}

// Stored energy plus the closed-form integral of (h/L)|V| equals the supply.
TEST(ElementProperties, PassiveWithExactHystereticSlack) {
  bph_test::SplitMix rng(5);
  for (int run = 0; run < 20; ++run) {
    const BacklashParams p{.L = rng.uniform(0.5, 2.0), .h = rng.uniform(0.1, 1.0)};
    std::vector<double> t{0.0}, v{rng.uniform(-2, 2)};
    for (int k = 0; k < 10; ++k) {
      t.push_back(t.back() + rng.uniform(0.2, 1.0));
      v.push_back(rng.uniform(-2, 2));
    }
    const auto traj = simulate(build_backlash_element(p), {}, pwl(t, v), exact_solver(0.01));
    double slack = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) slack += p.h / p.L * abs_integral(v[k - 1], v[k], t[k] - t[k - 1]);
    const auto& end = traj.back();
    const double dH = end.phi * end.phi / (2 * p.L);
    EXPECT_NEAR(end.ledger.hysteretic, slack, 1e-10 * std::max(1.0, slack));
    EXPECT_NEAR(end.ledger.supplied - dH, slack, 1e-10 * std::max(1.0, slack));
    EXPECT_GE(end.ledger.supplied - dH, -1e-12);
  }
}

TEST(ElementProperties, ZeroWidthIsLinearInductor) {
  const BacklashParams p{.L = 1.5, .h = 0.0};
  const auto traj = simulate(build_backlash_element(p), {}, pwl({0, 1, 2, 3}, {1, -2, 0.5, 0}), exact_solver(0.01));
  for (const auto& s : traj.samples) {
    EXPECT_EQ(s.I, s.phi / p.L);
    EXPECT_EQ(s.ledger.hysteretic, 0.0);
    EXPECT_FALSE(s.is_event());
  }
}

// Time scaling t -> 2t with V -> V/2 leaves the (phi, I) curve and the losses unchanged.
TEST(ElementProperties, RateIndependent) {
  const BacklashParams p{.L = 1.0, .h = 0.5};
  const std::vector<double> t{0, 1, 2.5, 3, 4.5, 6};
  const std::vector<double> v{1, -1.5, 0.25, 2, -1, 0.5};
  std::vector<double> t2, v2;
  for (double x : t) t2.push_back(2 * x);
  for (double x : v) v2.push_back(x / 2);
  const auto a = simulate(build_backlash_element(p), {}, pwl(t, v), exact_solver(1.0 / 64));
  const auto b = simulate(build_backlash_element(p), {}, pwl(t2, v2), exact_solver(2.0 / 64));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_DOUBLE_EQ(2 * a.samples[k].t, b.samples[k].t);
    EXPECT_NEAR(a.samples[k].phi, b.samples[k].phi, 1e-12);
    EXPECT_NEAR(a.samples[k].I, b.samples[k].I, 1e-12);
    EXPECT_NEAR(a.samples[k].ledger.hysteretic, b.samples[k].ledger.hysteretic, 1e-12);
  }
}

TEST(ElementProperties, HoldsSelectionWhileVoltageIsZero) {
  const BacklashParams p{.L = 1.0, .h = 1.0};
  const auto traj = simulate(build_backlash_element(p), {}, pwl({0, 1, 2, 3}, {1, 1, 0, 0}), exact_solver(0.1));
  for (const auto& s : traj.samples) {
    if (s.t >= 2.0) {
      EXPECT_EQ(s.s, 1.0);
      EXPECT_NEAR(s.I, s.phi + 1.0, 1e-15);
    }
  }
}
