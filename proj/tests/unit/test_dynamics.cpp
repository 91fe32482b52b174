#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fluxcz/dynamics.hpp"
#include "fluxcz/errors.hpp"
#include "fluxcz/reference_sets.hpp"

using namespace fluxcz;

namespace {

const CompositeModel& strong_model() {
  static const CompositeModel m(reference_set_500mhz());
  return m;
}

const BareLabel k11{1, 0, 1};
const BareLabel k22{2, 0, 2};

// |101> <-> |202> resonance of the 500 MHz set at Φ_s = 0.35, δ = 0.045,
// located by the Floquet scan.
constexpr double kResonance = 10.786;

}  // namespace

TEST_CASE("flux waveform endpoints and flat top") {
  const ParametricPulse p{0.35, 0.045, 10.0, 0.3, 5.0, 40.0};
  CHECK(flux_waveform(p, std::nullopt, 0.0) == doctest::Approx(0.35).epsilon(1e-15));
  const double mid = 20.0;
  CHECK(flux_waveform(p, std::nullopt, mid) ==
        doctest::Approx(0.35 + 0.045 * std::cos(2.0 * std::numbers::pi * 10.0 * mid + 0.3)));
  const BiasRamp r{0.0, 0.35, 3.0, 3.0, 3.0};
  CHECK(flux_waveform(p, r, 0.0) == 0.0);
  CHECK(flux_waveform(p, r, 40.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(flux_waveform(p, std::nullopt, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(FluxSchedule(ParametricPulse{0.35, 0.0, 0.0, 0.0, 30.0, 40.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(FluxSchedule(p, BiasRamp{0.0, 0.30, 3.0, 3.0, 3.0}), std::invalid_argument);
}

TEST_CASE("envelope is C1 and the rate matches a finite difference") {
  const double len = 30.0, ramp = 4.0;
  for (double t : {0.0, ramp, len - ramp, len}) {
    const double eps = 1e-7;
    CHECK(std::abs(flat_top(t + eps, len, ramp) - flat_top(t - eps, len, ramp)) < 1e-6);
    CHECK(std::abs(flat_top_rate(t + eps, len, ramp) - flat_top_rate(t - eps, len, ramp)) < 1e-6);
  }
  const FluxSchedule s(ParametricPulse{0.35, 0.045, 10.0, 0.1, 5.0, 40.0},
                       BiasRamp{0.0, 0.35, 3.0, 3.0, 3.0});
  for (double t = 0.13; t < 40.0; t += 1.37) {
    const double h = 1e-6;
    const double fd = (s.flux(t + h) - s.flux(t - h)) / (2.0 * h);
    CHECK(std::abs(s.rate(t) - fd) < 1e-5);
  }
}

TEST_CASE("time step precondition") {
  const ParametricPulse p{0.35, 0.045, 10.8, 0.0, 0.0, 5.0};
  CHECK_THROWS_AS(propagate_state(strong_model(), p, std::nullopt, InitialState::basis(k11), {},
                                  {k11}, {0.004}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Propagator(strong_model(), {0.0}), std::invalid_argument);
}

TEST_CASE("undriven dressed state is stationary") {
  const ParametricPulse p{0.35, 0.0, 0.0, 0.0, 0.0, 50.0};
  const EvolutionResult r = propagate_state(strong_model(), p, std::nullopt,
                                            InitialState::basis({0, 0, 0}), {10, 25, 50},
                                            {{0, 0, 0}, k11});
  for (double v : r.populations[0]) CHECK(std::abs(v - 1.0) < 1e-8);
  for (double v : r.populations[1]) CHECK(v < 1e-8);
  CHECK(r.norm_drift < 1e-8);
}

TEST_CASE("undriven computational propagator is the identity") {
  const ParametricPulse p{0.35, 0.0, 0.0, 0.0, 0.0, 20.0};
  const ComputationalPropagator u = propagate_computational_unitary(strong_model(), p, std::nullopt);
  CHECK((u.u - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff() < 1e-6);
  for (double l : u.leakage) CHECK(l < 1e-8);
}

TEST_CASE("full-space propagator is unitary") {
  const FluxSchedule s(ParametricPulse{0.35, 0.045, kResonance, 0.0, 0.0, 2.0});
  const Propagator prop(strong_model());
  const Eigen::MatrixXcd u = prop.propagator(s, 0.0, 2.0);
  const int d = strong_model().dimension();
  CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("norm is conserved over 200 ns of driving") {
  const ParametricPulse p{0.35, 0.045, kResonance, 0.0, 5.0, 200.0};
  const EvolutionResult r = propagate_state(strong_model(), p, std::nullopt,
                                            InitialState::computational_superposition(),
                                            {50, 100, 150, 200}, {k11});
  CHECK(r.norm_drift < 1e-8);
  for (double v : r.computational_population) CHECK(v <= 1.0 + 1e-8);
}

TEST_CASE("backward propagation returns the initial state") {
  const FluxSchedule s(ParametricPulse{0.35, 0.045, kResonance, 0.7, 1.0, 4.0},
                       BiasRamp{0.2, 0.35, 1.0, 1.0, 1.0});
  const Propagator prop(strong_model());
  Block x = Block::Zero(strong_model().dimension(), 2);
  x(strong_model().index(k11), 0) = 1.0;
  x(3, 1) = std::sqrt(0.5);
  x(40, 1) = cplx(0.0, std::sqrt(0.5));
  const Block x0 = x;
  prop.evolve(s, 0.0, 4.0, x);
  CHECK((x - x0).cwiseAbs().maxCoeff() > 1e-2);
  prop.evolve(s, 4.0, 0.0, x);
  CHECK((x - x0).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("periodic acceleration agrees with plain stepping") {
  const ParametricPulse p{0.35, 0.045, kResonance, 0.0, 2.0, 30.0};
  const std::vector<double> times{5.0, 12.3, 30.0};
  PropagatorOptions fast, slow;
  slow.periodic = false;
  const auto a = propagate_state(strong_model(), p, std::nullopt, InitialState::basis(k11), times,
                                 {k11, k22}, fast);
  const auto b = propagate_state(strong_model(), p, std::nullopt, InitialState::basis(k11), times,
                                 {k11, k22}, slow);
  for (int l = 0; l < 2; ++l)
    for (std::size_t k = 0; k < times.size(); ++k)
      CHECK(std::abs(a.populations[l][k] - b.populations[l][k]) < 1e-8);
}

TEST_CASE("populations are stable under time-step halving") {
  const ParametricPulse p{0.35, 0.045, kResonance, 0.0, 2.0, 40.0};
  const std::vector<double> times{10.0, 25.0, 40.0};
  PropagatorOptions coarse, fine;
  fine.dt = 0.5 * coarse.dt;
  const auto a = propagate_state(strong_model(), p, std::nullopt, InitialState::basis(k11), times,
                                 {k11, k22}, coarse);
  const auto b = propagate_state(strong_model(), p, std::nullopt, InitialState::basis(k11), times,
                                 {k11, k22}, fine);
  for (int l = 0; l < 2; ++l)
    for (std::size_t k = 0; k < times.size(); ++k)
      CHECK(std::abs(a.populations[l][k] - b.populations[l][k]) < 1e-6);
}

TEST_CASE("resonant drive swaps |101> and |202>, off-resonant drive does not") {
  const std::vector<double> times{5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  const ParametricPulse on{0.35, 0.045, kResonance, 0.0, 0.0, 50.0};
  const auto r = propagate_state(strong_model(), on, std::nullopt, InitialState::basis(k11), times,
                                 {k11, k22});
  double lo = 1.0;
  for (double v : r.populations[0]) lo = std::min(lo, v);
  CHECK(lo < 0.2);
  // Ramped drive 500 MHz either side of the resonance; the state is read out
  // after the envelope has closed.
  for (double detuning : {-0.5, 0.5}) {
    const ParametricPulse off{0.35, 0.045, kResonance + detuning, 0.0, 10.0, 100.0};
    const auto q = propagate_state(strong_model(), off, std::nullopt, InitialState::basis(k11),
                                   {100.0}, {k11});
    CHECK(q.populations[0][0] > 0.99);
  }
}

TEST_CASE("dressed populations sum to one once the coupler is back at idle") {
  const ParametricPulse p{0.35, 0.045, kResonance, 0.0, 2.0, 20.0};
  const BiasRamp ramp{0.0, 0.35, 3.0, 3.0, 3.0};
  const FluxSchedule s(p, ramp);
  const DressedFrame frame = dressed_frame(strong_model(), 0.0);
  Block a = Block::Zero(strong_model().dimension(), 1);
  a(frame.spectrum.dressed_index(k11), 0) = 1.0;
  Block x = from_dressed(strong_model(), frame, s.flux(0.0), a);
  Propagator(strong_model()).run(s, 0.0, 20.0, x);
  const Block y = to_dressed(strong_model(), frame, s.flux(20.0), 20.0, x);
  CHECK(std::abs(y.squaredNorm() - 1.0) < 1e-8);
}

TEST_CASE("ambiguous initial label is rejected") {
  const ParametricPulse p{0.425, 0.0, 0.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(propagate_state(strong_model(), p, std::nullopt,
                                  InitialState::basis({1, 0, 2}), {}, {}),
                  LabelingError);
}

TEST_CASE("chevron scan: flat without drive, thread count does not change results") {
  const ParametricPulse undriven{0.35, 0.0, 0.0, 0.0, 0.0, 10.0};
  const std::vector<double> freqs{10.7, 10.8};
  const std::vector<double> times{2.0, 6.0, 10.0};
  const PopulationMap flat = chevron_scan(strong_model(), undriven, freqs, times,
                                          InitialState::computational_superposition(), {});
  CHECK((flat.values.array() - 1.0).abs().maxCoeff() < 1e-8);

  ParametricPulse driven = undriven;
  driven.drive_amp = 0.045;
  const auto serial = chevron_scan(strong_model(), driven, freqs, times,
                                   InitialState::basis(k11), {k11}, {}, 1);
  const auto parallel = chevron_scan(strong_model(), driven, freqs, times,
                                     InitialState::basis(k11), {k11}, {}, 2);
  CHECK((serial.values - parallel.values).cwiseAbs().maxCoeff() == 0.0);
  for (const auto& f : serial.failures) CHECK(f.empty());
}

TEST_CASE("scan failures are recorded per point") {
  const ParametricPulse p{0.35, 0.045, 0.0, 0.0, 0.0, 5.0};
  // The second frequency violates the time-step bound.
  const auto m = chevron_scan(strong_model(), p, {10.8, 30.0}, {1.0}, InitialState::basis(k11),
                              {k11});
  CHECK(m.failures[0].empty());
  CHECK_FALSE(m.failures[1].empty());
  CHECK(std::isnan(m.values(1, 0)));
}

TEST_CASE("amplitude scan: zero amplitude keeps the initial state") {
  const ParametricPulse p{0.35, 0.0, 0.0, 0.0, 0.0, 5.0};
  const auto m = amplitude_scan(strong_model(), p, {10.7, 10.8}, {0.0, 0.02}, 5.0,
                                InitialState::basis(k11), {k11}, {}, 2);
  CHECK(std::abs(m.values(0, 0) - 1.0) < 1e-8);
  CHECK(std::abs(m.values(1, 0) - 1.0) < 1e-8);
  CHECK(m.values(1, 1) < 1.0);
}
