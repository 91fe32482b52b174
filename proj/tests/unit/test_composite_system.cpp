#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "fluxcz/composite_system.hpp"
#include "fluxcz/reference_sets.hpp"

using namespace fluxcz;

namespace {

LabeledSpectrum spectrum_at(const CompositeModel& m, double flux) {
  return label_eigenstates(m.hamiltonian(flux));
}

}  // namespace

TEST_CASE("bare label parsing") {
  CHECK(BareLabel::parse("|101>") == BareLabel{1, 0, 1});
  CHECK(BareLabel::parse("202") == BareLabel{2, 0, 2});
  CHECK(BareLabel::parse("1,3,2") == BareLabel{1, 3, 2});
  CHECK(BareLabel{1, 2, 1}.str() == "|121>");
  CHECK_THROWS(BareLabel::parse("12"));
}

TEST_CASE("decoupled limit gives sums of single-circuit energies") {
  CompositeParams p = reference_set_500mhz();
  p.j_c0 = p.j_c1 = p.j_01 = 0.0;
  const CompositeModel m(p);
  const double flux = 0.2;
  const LabeledSpectrum s = spectrum_at(m, flux);
  const OscillatorParams osc = m.coupler(flux);
  for (int i = 0; i < m.dimension(); ++i) {
    const BareLabel l = m.label_of(i);
    const double expect = m.q0_spectrum().energies[l.q0] + m.q1_spectrum().energies[l.q1] +
                          osc.omega_c * l.c + 0.5 * osc.alpha_c * l.c * (l.c - 1);
    CHECK(std::abs(s.energy(l) - expect) < 1e-9);
    CHECK(s.overlaps[s.dressed_index(l)] == doctest::Approx(1.0));
    CHECK(s.labels[s.dressed_index(l)] == l);
  }
  const PlasmonShifts sh = state_dependent_shifts(s);
  CHECK(sh.q0 < 1e-9);
  CHECK(sh.q1 < 1e-9);
  CHECK(std::abs(zz_coupling(s)) < 1e-9);
}

TEST_CASE("composite Hamiltonian is symmetric with the parity block structure") {
  const CompositeModel m(reference_set_500mhz());
  const CompositeOperator op = m.hamiltonian(0.35);
  CHECK(op.matrix.rows() == 150);
  const double norm = op.matrix.norm();
  CHECK((op.matrix - op.matrix.transpose()).norm() <= 1e-12 * norm);
  // Each charge operator flips one fluxonium parity, so total fluxonium parity
  // plus coupler photon parity is conserved.
  for (int i = 0; i < 150; ++i)
    for (int j = 0; j < 150; ++j) {
      const BareLabel a = m.label_of(i), b = m.label_of(j);
      const int pa = (a.q0 + a.q1 + a.c) % 2, pb = (b.q0 + b.q1 + b.c) % 2;
      if (pa != pb) CHECK(op.matrix(i, j) == 0.0);
    }
}

TEST_CASE("residual ZZ stays at the kHz scale") {
  const CompositeModel m(reference_set_500mhz());
  for (double f : {0.0, 0.1, 0.2, 0.3, 0.35, 0.4}) {
    const LabeledSpectrum s = spectrum_at(m, f);
    const double zz = zz_coupling(s);
    const PlasmonShifts sh = state_dependent_shifts(s);
    CHECK(std::abs(zz) < 5e-6);
    if (f >= 0.3) CHECK(std::abs(zz) * 100.0 < std::max(sh.q0, sh.q1));
  }
  // Regression values from this implementation.
  CHECK(zz_coupling(spectrum_at(m, 0.35)) == doctest::Approx(-2.72963e-06).epsilon(1e-3));
}

TEST_CASE("labels form a permutation under random coupling perturbations") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> u(0.9, 1.1);
  const CompositeParams base = reference_set_500mhz();
  const CompositeModel ref(base);
  for (int trial = 0; trial < 100; ++trial) {
    CompositeParams p = base;
    p.j_c0 *= u(rng);
    p.j_c1 *= u(rng);
    p.j_01 *= u(rng);
    const LabeledSpectrum s = spectrum_at(CompositeModel(p), 0.3);
    std::set<BareLabel> seen(s.labels.begin(), s.labels.end());
    CHECK(seen.size() == s.labels.size());
    for (double ov : s.overlaps) CHECK((ov > 0.0 && ov <= 1.0 + 1e-12));
  }
}

TEST_CASE("target states unambiguous at idle and interaction points") {
  const CompositeModel m(reference_set_500mhz());
  for (double f : {0.0, 0.2, 0.35}) {
    const LabeledSpectrum s = spectrum_at(m, f);
    CHECK_FALSE(s.is_ambiguous({1, 0, 1}));
    CHECK_FALSE(s.is_ambiguous({2, 0, 2}));
  }
}

TEST_CASE("exchange symmetry of the two fluxoniums") {
  CompositeParams p = reference_set_500mhz();
  p.j_c1 = 0.45;
  CompositeParams q = p;
  std::swap(q.q0, q.q1);
  std::swap(q.j_c0, q.j_c1);
  const LabeledSpectrum a = spectrum_at(CompositeModel(p), 0.3);
  const LabeledSpectrum b = spectrum_at(CompositeModel(q), 0.3);
  CHECK((a.energies - b.energies).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("coupler truncation convergence") {
  CompositeParams p = reference_set_500mhz();
  const CompositeModel m6(p);
  p.n_coupler_levels = 8;
  const CompositeModel m8(p);
  for (double f : {0.0, 0.35}) {
    const LabeledSpectrum a = spectrum_at(m6, f);
    const LabeledSpectrum b = spectrum_at(m8, f);
    for (int i = 0; i < m6.dimension(); ++i) {
      const BareLabel l = m6.label_of(i);
      if (a.energy(l) - a.energies[0] > 15.0) continue;
      CHECK(std::abs(a.energy(l) - b.energy(l)) < 1e-4);
    }
    const double za = zz_coupling(a), zb = zz_coupling(b);
    CHECK(std::abs(za - zb) < 0.01 * std::abs(zb));
  }
}

TEST_CASE("state-dependent shifts: idle near zero flux, large at interaction point") {
  const CompositeModel m(reference_set_500mhz());
  const PlasmonShifts idle = state_dependent_shifts(spectrum_at(m, 0.0));
  const PlasmonShifts inter = state_dependent_shifts(spectrum_at(m, 0.35));
  CHECK(std::max(idle.q0, idle.q1) < 1e-4);
  CHECK(std::max(inter.q0, inter.q1) > 1e-3);
  const double idle_flux = find_idle_point(m, 0.0, 0.4, 0.02);
  CHECK(std::abs(idle_flux) < 0.02);
}

TEST_CASE("weak set idles near 0.30 with a steep shift slope there") {
  const CompositeModel weak(reference_set_300mhz());
  const double idle = find_idle_point(weak, 0.2, 0.34, 0.01);
  CHECK(std::abs(idle - 0.30) < 0.01);
  auto worst = [](const CompositeModel& m, double f) {
    const PlasmonShifts s = state_dependent_shifts(spectrum_at(m, f));
    return std::max(s.q0, s.q1);
  };
  const double weak_slope = (worst(weak, 0.32) - worst(weak, 0.30)) / 0.02;
  const CompositeModel strong(reference_set_500mhz());
  const double strong_slope = (worst(strong, 0.02) - worst(strong, 0.0)) / 0.02;
  CHECK(weak_slope > 10.0 * strong_slope);
}

TEST_CASE("idle search on a symmetric range finds the symmetry point") {
  const CompositeModel m(reference_set_500mhz());
  CHECK(std::abs(find_idle_point(m, -0.3, 0.3, 0.05)) < 1e-3);
  CHECK_THROWS_AS(find_idle_point(m, 0.0, 0.6, 0.05), DomainError);
}

TEST_CASE("basis change is orthogonal and composes") {
  const CompositeModel m(reference_set_500mhz());
  const Eigen::MatrixXd a = m.basis_change(0.0, 0.2);
  const Eigen::MatrixXd b = m.basis_change(0.2, 0.35);
  const Eigen::MatrixXd c = m.basis_change(0.0, 0.35);
  CHECK((a.transpose() * a - Eigen::MatrixXd::Identity(150, 150)).norm() < 1e-12);
  CHECK((b * a - c).norm() < 1e-12);
  CHECK((m.basis_change(0.3, 0.3) - Eigen::MatrixXd::Identity(150, 150)).norm() < 1e-14);
}

TEST_CASE("basis change maps the vacuum to a state with the right phase spread") {
  // Coupler vacuum at flux a has <φ²> = φ_zpf(a)²; in the basis at flux b the
  // same state has <X²> = (φ_zpf(a)/φ_zpf(b))², X = b + b†.
  CompositeParams p = reference_set_500mhz();
  p.n_coupler_levels = 12;
  const CompositeModel m(p);
  const double fa = 0.0, fb = 0.1;
  const Eigen::MatrixXd g = m.basis_change(fa, fb);
  Eigen::VectorXd vac = Eigen::VectorXd::Zero(m.dimension());
  vac[m.index({0, 0, 0})] = 1.0;
  const Eigen::VectorXd v = g * vac;
  const int nc = p.n_coupler_levels;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(nc, nc);
  for (int k = 1; k < nc; ++k) x(k - 1, k) = x(k, k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::VectorXd vc(nc);
  for (int k = 0; k < nc; ++k) vc[k] = v[m.index({0, k, 0})];
  const double x2 = vc.dot(x * x * vc);
  const double ratio = m.coupler(fa).phi_zpf / m.coupler(fb).phi_zpf;
  CHECK(x2 == doctest::Approx(ratio * ratio).epsilon(1e-6));
}
