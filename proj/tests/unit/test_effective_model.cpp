#include <cmath>

#include "../support/toy_oracles.hpp"
#include "doctest.h"
#include "fluxcz/effective_model.hpp"
#include "fluxcz/reference_sets.hpp"

using namespace fluxcz;

TEST_CASE("plasmon-coupler strengths") {
  const CompositeParams p = reference_set_500mhz();
  const SpectralData q0 = diagonalize_fluxonium(p.q0, 120, 5);
  const SpectralData q1 = diagonalize_fluxonium(p.q1, 120, 5);
  const SpectralData c = diagonalize_transmon_charge({0.32, 55.0, 0.35}, 30, 3);
  const double nc = c.charge_element(0, 1);
  const EffectiveCouplings ec = plasmon_coupler_strengths(q0, q1, nc, {}, 0.5, 0.5, 0.125);
  CHECK(std::abs(ec.g_pc0 - 0.500 * 0.562 * 1.223) < 2e-3);
  CHECK(ec.g_pc0 == doctest::Approx(0.5 * q0.charge_element(1, 2) * nc).epsilon(1e-12));
  CHECK(ec.g_p01 == doctest::Approx(0.125 * q0.charge_element(1, 2) * q1.charge_element(1, 2)));

  const EffectiveCouplings none = plasmon_coupler_strengths(q0, q1, nc, {}, 0.5, 0.5, 0.0);
  CHECK(none.g_p01 == 0.0);

  const EffectiveCouplings qubit =
      plasmon_coupler_strengths(q0, q1, nc, {{0, 1}, {0, 1}}, 0.5, 0.5, 0.125);
  const double ratio = qubit.g_pc0 / ec.g_pc0;
  CHECK(std::abs(ratio - 0.068 / 0.562) < 0.01);

  const EffectiveCouplings forbidden =
      plasmon_coupler_strengths(q0, q1, nc, {{0, 2}, {1, 2}}, 0.5, 0.5, 0.125);
  CHECK_FALSE(forbidden.warnings.empty());
  CHECK_THROWS_AS(plasmon_coupler_strengths(q0, q1, nc, {{2, 1}, {1, 2}}, 0.5, 0.5, 0.1),
                  std::invalid_argument);
}

TEST_CASE("static plasmon coupling closed form") {
  EffectiveCouplings ec;
  ec.g_pc0 = ec.g_pc1 = 0.1;
  const double gp = static_plasmon_coupling(ec, 5.0, 5.0, 7.0);
  CHECK(gp == doctest::Approx(0.005 * 2.0 * (1.0 / -2.0 - 1.0 / 12.0)).epsilon(1e-12));
  CHECK(gp == doctest::Approx(-0.005833).epsilon(1e-3));

  EffectiveCouplings direct;
  direct.g_p01 = 0.02;
  CHECK(static_plasmon_coupling(direct, 5.0, 5.2, 7.0) == 0.02);

  EffectiveCouplings near;
  near.g_pc0 = near.g_pc1 = 0.1;
  static_plasmon_coupling(near, 6.5, 5.0, 7.0);
  CHECK_FALSE(near.warnings.empty());
}

TEST_CASE("static coupling matches a three-oscillator exact diagonalization") {
  for (double g : {0.05, 0.1}) {
    for (double g01 : {0.0, 0.01}) {
      const double wp = 5.0, wc = 7.0;
      EffectiveCouplings ec;
      ec.g_pc0 = ec.g_pc1 = g;
      ec.g_p01 = g01;
      const double gp = static_plasmon_coupling(ec, wp, wp, wc);
      const double exact = 0.5 * toy::three_mode_splitting(wp, wc, g, g, g01);
      const double delta = wc - wp;
      CHECK(std::abs(std::abs(gp) - exact) < g * g * g / (delta * delta));
    }
  }
}

TEST_CASE("SWT dressed shifts") {
  EffectiveCouplings ec;
  ec.g_pc0 = 0.05;
  ec.omega_p = {6.0, 5.0};
  const SwtShifts s = swt_dressed_shifts(ec, 5.0);
  CHECK(s.p0 == doctest::Approx(0.0025).epsilon(1e-12));
  CHECK(s.p1 == 0.0);
  CHECK(s.c == doctest::Approx(-0.0025).epsilon(1e-12));

  const SwtShifts zero = swt_dressed_shifts(EffectiveCouplings{}, 7.0);
  CHECK(zero.p0 == 0.0);
  CHECK(zero.c == 0.0);

  for (double g : {0.02, 0.05, 0.1}) {
    for (double d : {1.0, -1.5}) {
      EffectiveCouplings e;
      e.g_pc0 = g;
      e.omega_p = {5.0 + d, 0.0};
      const double exact = toy::two_mode_shift(5.0 + d, 5.0, g);
      const double swt = swt_dressed_shifts(e, 5.0).p0;
      CHECK(std::abs(exact - swt) <= std::pow(g, 4) / std::pow(std::abs(d), 3));
    }
  }
}

TEST_CASE("parametric strength") {
  const CompositeParams p = reference_set_500mhz();
  const ParametricCoupling zero = parametric_strength(p, {}, 0.0, 0.045);
  CHECK(zero.g_eff == 0.0);
  CHECK(zero.zero_derivative);

  const ParametricCoupling a = parametric_strength(p, {}, 0.35, 0.045);
  const ParametricCoupling b = parametric_strength(p, {}, 0.35, 0.09);
  CHECK(b.g_eff == doctest::Approx(2.0 * a.g_eff).epsilon(1e-14));
  CHECK(std::abs(a.resonance_sum - (5.621 + 5.269)) < 4e-3);
  CHECK(a.g_eff != 0.0);

  const ParametricCoupling m = parametric_strength(p, {}, -0.35, 0.045);
  CHECK(m.g_eff == doctest::Approx(-a.g_eff).epsilon(1e-9));
  CHECK(m.resonance_sum == doctest::Approx(a.resonance_sum));

  const ParametricCoupling big = parametric_strength(p, {}, 0.35, 0.15);
  CHECK_FALSE(big.warnings.empty());
  const ParametricCoupling dressed =
      parametric_strength(p, {}, 0.35, 0.045, std::make_pair(5.60, 5.25));
  CHECK(dressed.dressed_frequencies);
  CHECK(dressed.resonance_sum == doctest::Approx(10.85));
}

TEST_CASE("squeezing coefficients") {
  const TransmonParams c{0.32, 55.0, 0.0};
  CHECK(squeezing_coefficients(c, 0.0, 0.045).two_photon == 0.0);
  const SqueezingCoefficients s = squeezing_coefficients(c, 0.35, 0.045);
  const SqueezingCoefficients m = squeezing_coefficients(c, -0.35, 0.045);
  CHECK(s.one_photon == 0.0);
  CHECK(s.two_photon < 0.0);
  CHECK(m.two_photon == doctest::Approx(-s.two_photon));
  // The two-photon resonance sits at the coupler |0>->|2> frequency.
  const SpectralData cs = diagonalize_transmon_charge({0.32, 55.0, 0.35}, 30, 3);
  CHECK(std::abs(cs.transition(0, 2) - 14.97) < 0.01);
}

TEST_CASE("transition taxonomy") {
  CHECK(classify_transition({1, 0, 1}, {2, 0, 2}) == TransitionCategory::bswap_plasmon);
  CHECK(classify_transition({0, 0, 1}, {0, 1, 4}) == TransitionCategory::sideband_coupler);
  CHECK(classify_transition({0, 0, 0}, {0, 2, 0}) == TransitionCategory::coupler_squeezing);
  CHECK(classify_transition({0, 0, 0}, {0, 0, 4}) == TransitionCategory::cross_driving);
  CHECK(classify_transition({2, 0, 2}, {1, 0, 1}) == TransitionCategory::bswap_plasmon);
  CHECK(classify_transition({0, 0, 0}, {0, 0, 1}) == TransitionCategory::other);
  // Total: every pair maps to exactly one valid category.
  int counted = 0;
  for (int a = 0; a < 3 * 3 * 3; ++a)
    for (int b = 0; b < 3 * 3 * 3; ++b) {
      const BareLabel x{a / 9, (a / 3) % 3, a % 3}, y{b / 9, (b / 3) % 3, b % 3};
      const std::string name = to_string(classify_transition(x, y));
      CHECK_FALSE(name.empty());
      ++counted;
    }
  CHECK(counted == 729);
}

TEST_CASE("dressed shifts agree with second-order estimates in the dispersive regime") {
  // Couplings scaled down so every denominator is far from resonance.
  for (bool strong : {true, false}) {
    CompositeParams p = reference_set(strong);
    p.j_c0 *= 0.2;
    p.j_c1 *= 0.2;
    p.j_01 *= 0.2;
    const CompositeModel m(p);
    for (double f : {0.0, 0.1, 0.2}) {
      const CompositeOperator op = m.hamiltonian(f);
      double ratio = 0.0;
      const PlasmonShifts est = perturbative_shifts(op, &ratio);
      const PlasmonShifts exact = state_dependent_shifts(label_eigenstates(op));
      REQUIRE(ratio > 5.0);
      CHECK(std::abs(est.q0 - exact.q0) < 0.2 * exact.q0);
      CHECK(std::abs(est.q1 - exact.q1) < 0.2 * exact.q1);
    }
  }
}
