#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fluxcz/gate_lab.hpp"
#include "fluxcz/reference_sets.hpp"

using namespace fluxcz;

namespace {

constexpr double kPi = std::numbers::pi;

const CompositeModel& strong_model() {
  static const CompositeModel m(reference_set_500mhz());
  return m;
}

Eigen::Matrix4cd ideal_cz() {
  return Eigen::Vector4cd(1.0, 1.0, 1.0, -1.0).asDiagonal();
}

// Random near-CZ matrix with small off-diagonal mixing and column losses.
Eigen::Matrix4cd perturbed_cz(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 0.02);
  Eigen::Matrix4cd u = ideal_cz();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) u(i, j) += cplx(n(rng), n(rng));
  for (int j = 0; j < 4; ++j) u.col(j) *= 0.99 / u.col(j).norm();
  return u;
}

// Two-level |11> <-> |22> model: coupling kappa·amp, detuning freq - f0,
// duration t. Computational states other than |11> are untouched.
GateMetrics toy_bswap(double freq, double amp, double f0, double kappa, double t) {
  Eigen::Matrix2cd h;
  h << 0.0, kappa * amp, kappa * amp, -(freq - f0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h);
  Eigen::Vector2cd ph;
  for (int k = 0; k < 2; ++k) ph[k] = std::exp(cplx(0.0, -2.0 * kPi * es.eigenvalues()[k] * t));
  const Eigen::Matrix2cd v = es.eigenvectors();
  const Eigen::Matrix2cd u2 = v * ph.asDiagonal() * v.adjoint();
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  u(3, 3) = u2(0, 0);
  return gate_metrics(u);
}

}  // namespace

TEST_CASE("metric fixtures") {
  const GateMetrics cz = gate_metrics(ideal_cz());
  CHECK(cz.fidelity == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(cz.leakage) < 1e-14);
  CHECK(cz.conditional_phase == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(std::abs(cz_objective(cz)) < 1e-14);

  const GateMetrics id = gate_metrics(Eigen::Matrix4cd::Identity());
  CHECK(id.fidelity == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(std::abs(id.conditional_phase) < 1e-14);

  for (double l : {0.01, 0.1, 0.5}) {
    Eigen::Matrix4cd u = ideal_cz();
    u.col(0) *= std::sqrt(1.0 - l);
    const GateMetrics m = gate_metrics(u);
    CHECK(m.leakage == doctest::Approx(l / 4.0).epsilon(1e-12));
    const double tr = 3.0 + std::sqrt(1.0 - l);
    CHECK(m.fidelity == doctest::Approx((4.0 - l + tr * tr) / 20.0).epsilon(1e-12));
  }

  Eigen::Matrix4cd weak = ideal_cz();
  weak(1, 1) = 1e-4;
  CHECK(gate_metrics(weak).phase_unreliable);
}

TEST_CASE("metrics are invariant under global phase and single-qubit Z") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Matrix4cd u = perturbed_cz(rng);
    const GateMetrics a = gate_metrics(u);
    const double g = angle(rng), t0 = angle(rng), t1 = angle(rng);
    const Eigen::Vector4cd z(std::polar(1.0, g), std::polar(1.0, g + t1), std::polar(1.0, g + t0),
                             std::polar(1.0, g + t0 + t1));
    const GateMetrics b = gate_metrics(z.asDiagonal() * u);
    CHECK(std::abs(a.fidelity - b.fidelity) < 1e-12);
    CHECK(std::abs(std::remainder(a.conditional_phase - b.conditional_phase, 2.0 * kPi)) < 1e-12);
    CHECK(std::abs(a.leakage + u.squaredNorm() / 4.0 - 1.0) < 1e-10);
    CHECK(a.fidelity >= 0.0);
    CHECK(a.fidelity <= 1.0);
  }
}

TEST_CASE("incoherent error formula") {
  CHECK(incoherent_error(100.0, {5.0, 5.0}) == doctest::Approx(5.125e-3).epsilon(1e-15));
  CHECK(incoherent_error(0.0, {5.0, 5.0}) == 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(incoherent_error(100.0, {inf, 5.0}) == doctest::Approx((13.0 / 80.0) * 0.02).epsilon(1e-15));
  CHECK_THROWS_AS(incoherent_error(100.0, {0.0, 5.0}), std::invalid_argument);
}

TEST_CASE("bounded simplex") {
  CHECK(reflect_into(1.2, 0.0, 1.0) == doctest::Approx(0.8));
  CHECK(reflect_into(-0.3, 0.0, 1.0) == doctest::Approx(0.3));
  CHECK(reflect_into(0.5, 0.0, 1.0) == 0.5);
  auto rosen = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  SimplexOptions opts;
  opts.max_evaluations = 2000;
  const SimplexResult r = nelder_mead(rosen, {-1.0, 1.5}, {0.2, 0.2}, {{-2.0, 2.0}, {-1.0, 3.0}}, opts);
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-3);
  // A minimum outside the box ends on the boundary.
  auto bowl = [](const std::vector<double>& x) { return std::pow(x[0] - 5.0, 2) + x[1] * x[1]; };
  const SimplexResult b = nelder_mead(bowl, {0.0, 0.5}, {0.3, 0.3}, {{-1.0, 1.0}, {-1.0, 1.0}}, opts);
  CHECK(b.x[0] <= 1.0);
  CHECK(b.x[0] > 0.99);
}

TEST_CASE("optimizer finds the two-level CZ point and is deterministic") {
  const double f0 = 10.8, kappa = 0.4, t = 50.0;
  // 2 kappa amp t = 1 gives a full cycle with a sign flip.
  const double amp_star = 1.0 / (2.0 * kappa * t);
  auto eval = [&](const std::vector<double>& x) { return toy_bswap(x[0], x[1], f0, kappa, t); };
  const std::vector<std::pair<double, double>> bounds{{10.7, 10.9}, {0.0, 0.1}};
  const CzOptimum a = optimize_cz_with(eval, {10.803, 0.9 * amp_star}, bounds);
  CHECK(a.success);
  CHECK(std::abs(a.freq - f0) < 1e-4);
  CHECK(std::abs(a.amp - amp_star) < 1e-4 * amp_star);
  CHECK(a.objective < 1e-8);
  const CzOptimum b = optimize_cz_with(eval, {10.803, 0.9 * amp_star}, bounds);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].x == b.trace[k].x);
    CHECK(a.trace[k].objective == b.trace[k].objective);
  }
  CHECK_THROWS_AS(optimize_cz_with(eval, {10.8, 0.02}, bounds, OptimizerSettings{2}),
                  std::invalid_argument);
}

TEST_CASE("optimizer reports stagnation") {
  // No coupling: the conditional phase never moves.
  auto eval = [](const std::vector<double>& x) { return toy_bswap(x[0], x[1], 10.8, 0.0, 50.0); };
  OptimizerSettings s;
  s.evaluations_per_restart = 30;
  const CzOptimum r = optimize_cz_with(eval, {10.8, 0.01}, {{10.7, 10.9}, {0.0, 0.1}}, s);
  CHECK_FALSE(r.success);
  CHECK_FALSE(r.message.empty());
  CHECK(r.trace.size() >= 30);
}

TEST_CASE("gate configuration checks") {
  GateConfig c;
  c.flux_interaction = c.flux_idle;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.mode = BiasMode::static_bias;
  CHECK_NOTHROW(c.validate());
  c.gate_time = 10.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_bias_mode("static-bias") == BiasMode::static_bias);
  CHECK(to_string(BiasMode::dynamic_bias) == "dynamic-bias");
  CHECK_THROWS(parse_bias_mode("ramp"));
}

TEST_CASE("undriven static gate is the identity") {
  GateConfig c;
  c.mode = BiasMode::static_bias;
  c.flux_idle = c.flux_interaction = 0.0;
  c.gate_time = 30.0;
  const GateMetrics m = evaluate_gate(strong_model(), c, 10.8, 0.0);
  // Residual ZZ leaves a phase just below 2π.
  CHECK(std::abs(std::remainder(m.conditional_phase, 2.0 * kPi)) < 1e-3);
  CHECK(m.leakage < 1e-8);
  CHECK(leakage_channels(m, 10).empty());
}

TEST_CASE("bias-only excursion leaks transiently but not at the end") {
  GateConfig c;
  c.flux_idle = 0.0;
  c.flux_interaction = 0.35;
  c.gate_time = 30.0;
  const GateLab lab(strong_model());
  const GateMetrics m = lab.evaluate(c, 0.0, 0.0);
  CHECK(m.leakage < 1e-6);
  // Mid-pulse the state is far from the idle dressed states.
  const auto [pulse, ramp] = lab.schedule(c, 0.0, 0.0);
  const EvolutionResult r = propagate_state(strong_model(), pulse, ramp,
                                            InitialState::basis({1, 0, 1}), {15.0, 30.0}, {});
  CHECK(r.computational_population[0] < 1.0 - 1e-6);
  CHECK(r.computational_population[1] > 1.0 - 1e-6);
}

TEST_CASE("leakage channel ranking") {
  GateMetrics m;
  m.labels = {{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}, {2, 0, 2}};
  m.populations = Eigen::Matrix<double, Eigen::Dynamic, 4>::Zero(7, 4);
  m.populations(4, 3) = 3e-3;
  m.populations(5, 3) = 1e-3;
  m.populations(6, 3) = 2e-3;
  m.populations(5, 1) = 1e-12;
  const auto ch = leakage_channels(m, 2);
  REQUIRE(ch.size() == 2);
  CHECK(ch[0].to == BareLabel{1, 2, 1});
  CHECK(ch[0].from == BareLabel{1, 0, 1});
  CHECK(ch[1].to == BareLabel{2, 0, 2});
  CHECK(leakage_channels(m, 10).size() == 3);
}
