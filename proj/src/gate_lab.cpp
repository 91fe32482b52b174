#include "fluxcz/gate_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fluxcz/errors.hpp"
#include "fluxcz/floquet.hpp"

namespace fluxcz {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_phase(double a) {
  // (-π, π]
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

void check_bounds(const std::pair<double, double>& b, const char* what) {
  if (!(b.second > b.first)) throw std::invalid_argument(std::string(what) + " bounds are empty");
}

}  // namespace

std::string to_string(BiasMode m) {
  return m == BiasMode::dynamic_bias ? "dynamic-bias" : "static-bias";
}

BiasMode parse_bias_mode(const std::string& s) {
  if (s == "dynamic-bias" || s == "dynamic") return BiasMode::dynamic_bias;
  if (s == "static-bias" || s == "static") return BiasMode::static_bias;
  throw std::invalid_argument("unknown bias mode '" + s + "'");
}

void GateConfig::validate() const {
  if (mode == BiasMode::dynamic_bias && flux_idle == flux_interaction)
    throw std::invalid_argument("dynamic-bias mode needs distinct idle and interaction fluxes");
  if (bias_ramp <= 0.0) throw std::invalid_argument("bias ramp must be positive");
  if (drive_ramp < 0.0) throw std::invalid_argument("drive ramp must be non-negative");
  const double window = mode == BiasMode::dynamic_bias ? gate_time - 2.0 * bias_ramp : gate_time;
  if (!(window > 2.0 * drive_ramp))
    throw std::invalid_argument("gate time too short for the ramps");
  check_bounds(freq_bounds, "frequency");
  check_bounds(amp_bounds, "amplitude");
  if (amp_bounds.first < 0.0) throw std::invalid_argument("amplitude bounds must be non-negative");
  if (optimize_bias) check_bounds(bias_bounds, "bias");
}

GateMetrics gate_metrics(const Eigen::Matrix4cd& u) {
  GateMetrics m;
  for (int i = 0; i < 4; ++i)
    if (std::abs(u(i, i)) < 1e-3) m.phase_unreliable = true;
  const double a00 = std::arg(u(0, 0));
  // Z rotations chosen so that U_01,01 and U_10,10 share the phase of U_00,00.
  const double th1 = -(std::arg(u(1, 1)) - a00);  // Q1
  const double th0 = -(std::arg(u(2, 2)) - a00);  // Q0
  m.single_qubit_phases = {wrap_phase(th0), wrap_phase(th1)};
  const Eigen::Vector4cd z(1.0, std::polar(1.0, th1), std::polar(1.0, th0), std::polar(1.0, th0 + th1));
  m.u = z.asDiagonal() * u;
  const Eigen::Vector4cd cz(1.0, 1.0, 1.0, -1.0);
  const double tr_uu = u.squaredNorm();
  const cplx tr_cz = (cz.conjugate().asDiagonal() * m.u).trace();
  m.fidelity = (tr_uu + std::norm(tr_cz)) / 20.0;
  m.error = 1.0 - m.fidelity;
  m.leakage = 1.0 - tr_uu / 4.0;
  double cp = std::arg(u(0, 0) * u(3, 3) / (u(1, 1) * u(2, 2)));
  if (cp < 0.0) cp += 2.0 * kPi;
  m.conditional_phase = cp;
  return m;
}

double cz_objective(const GateMetrics& m) {
  const double dphi = wrap_phase(m.conditional_phase - kPi);
  return m.leakage + dphi * dphi / (kPi * kPi);
}

double incoherent_error(double gate_time_ns, const CoherenceTimes& t) {
  if (gate_time_ns < 0.0) throw std::invalid_argument("gate time must be non-negative");
  if (!(t.t1_22 > 0.0) || !(t.tphi_22 > 0.0))
    throw std::invalid_argument("coherence times must be positive");
  const double tg = gate_time_ns * 1e-3;  // μs
  return (3.0 / 32.0) * (tg / t.t1_22) + (13.0 / 80.0) * (tg / t.tphi_22);
}

std::vector<LeakageChannel> leakage_channels(const GateMetrics& m, int top_k, double threshold) {
  if (top_k < 0) throw std::invalid_argument("top_k must be non-negative");
  const std::vector<BareLabel> comp = computational_labels();
  std::vector<LeakageChannel> out;
  for (int i = 0; i < static_cast<int>(m.labels.size()); ++i) {
    if (std::find(comp.begin(), comp.end(), m.labels[i]) != comp.end()) continue;
    for (int j = 0; j < 4; ++j)
      if (m.populations(i, j) > threshold) out.push_back({comp[j], m.labels[i], m.populations(i, j)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LeakageChannel& a, const LeakageChannel& b) { return a.population > b.population; });
  if (static_cast<int>(out.size()) > top_k) out.resize(top_k);
  return out;
}

GateLab::GateLab(const CompositeModel& model, PropagatorOptions options)
    : model_(model), options_(options) {}

std::pair<ParametricPulse, std::optional<BiasRamp>> GateLab::schedule(
    const GateConfig& cfg, double freq, double amp, std::optional<double> bias) const {
  const double flux = bias.value_or(cfg.drive_flux());
  if (cfg.mode == BiasMode::static_bias)
    return {ParametricPulse{flux, amp, freq, 0.0, cfg.drive_ramp, cfg.gate_time}, std::nullopt};
  return {ParametricPulse{flux, amp, freq, 0.0, cfg.drive_ramp, cfg.gate_time},
          BiasRamp{cfg.flux_idle, flux, cfg.bias_ramp, cfg.bias_ramp, cfg.bias_ramp}};
}

const DressedFrame& GateLab::frame(double flux) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto& slot = frames_[flux];
  if (!slot) slot = std::make_shared<DressedFrame>(dressed_frame(model_, flux));
  return *slot;
}

const Eigen::MatrixXcd& GateLab::ramp_propagator(const FluxSchedule& s, bool up) const {
  const BiasRamp& r = *s.ramp();
  const auto key = std::make_tuple(up, r.flux_idle, r.flux_interaction, r.ramp_time);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = ramps_.find(key);
    if (it != ramps_.end()) return *it->second;
  }
  // Bias-only segment; its propagator depends on time only through the ramp.
  const FluxSchedule bias_only(ParametricPulse{r.flux_interaction, 0.0, 0.0, 0.0, 0.0, s.duration()}, r);
  const double t0 = up ? 0.0 : s.duration() - r.ramp_time;
  const double t1 = up ? r.ramp_time : s.duration();
  auto m = std::make_shared<Eigen::MatrixXcd>(Propagator(model_, options_).propagator(bias_only, t0, t1));
  std::lock_guard<std::mutex> lock(mutex_);
  auto& slot = ramps_[key];
  if (!slot) slot = m;
  return *slot;
}

GateMetrics GateLab::evaluate(const GateConfig& cfg, double freq, double amp,
                              std::optional<double> bias) const {
  cfg.validate();
  const auto [pulse, ramp] = schedule(cfg, freq, amp, bias);
  const FluxSchedule s(pulse, ramp);
  check_time_step(model_, s, options_.dt);
  const DressedFrame& fr = frame(s.frame_flux());
  const LabeledSpectrum& levels = fr.spectrum;
  const std::vector<BareLabel> comp = computational_labels();
  Block a = Block::Zero(model_.dimension(), 4);
  for (int j = 0; j < 4; ++j) {
    if (levels.is_ambiguous(comp[j]))
      throw LabelingError("computational label " + comp[j].str() + " is ambiguous");
    a(levels.dressed_index(comp[j]), j) = 1.0;
  }
  const double tg = pulse.gate_time;
  Block x = from_dressed(model_, fr, s.flux(0.0), a);
  const Propagator prop(model_, options_);
  if (ramp) {
    x = (ramp_propagator(s, true) * x).eval();
    prop.run(s, s.drive_start(), s.drive_stop(), x);
    x = (ramp_propagator(s, false) * x).eval();
  } else {
    prop.run(s, 0.0, tg, x);
  }
  double drift = 0.0;
  for (int j = 0; j < 4; ++j) drift = std::max(drift, std::abs(x.col(j).norm() - 1.0));
  if (drift > 1e-8) throw IntegrationError("norm drift during gate evaluation", drift);
  const Block y = to_dressed(model_, fr, s.flux(tg), tg, x);
  Eigen::Matrix4cd u;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) u(i, j) = y(levels.dressed_index(comp[i]), j);
  GateMetrics m = gate_metrics(u);
  m.labels = levels.labels;
  m.populations = y.cwiseAbs2();
  return m;
}

GateMetrics evaluate_gate(const CompositeModel& model, const GateConfig& cfg, double freq,
                          double amp, const PropagatorOptions& options) {
  return GateLab(model, options).evaluate(cfg, freq, amp);
}

CzOptimum optimize_cz_with(const std::function<GateMetrics(const std::vector<double>&)>& evaluate,
                           const std::vector<double>& seed,
                           const std::vector<std::pair<double, double>>& bounds,
                           const OptimizerSettings& settings) {
  if (settings.restarts < 3) throw std::invalid_argument("at least three restarts are required");
  if (seed.size() != bounds.size() || settings.steps.size() < seed.size())
    throw std::invalid_argument("seed, bounds and steps disagree");
  CzOptimum out;
  out.objective = std::numeric_limits<double>::infinity();
  auto objective = [&](const std::vector<double>& x) {
    GateMetrics m = evaluate(x);
    const double f = cz_objective(m);
    out.trace.push_back({x, f});
    if (f < out.objective) {
      out.objective = f;
      out.metrics = std::move(m);
      out.freq = x[0];
      out.amp = x[1];
      if (x.size() > 2) out.bias = x[2];
    }
    return f;
  };
  SimplexOptions opts;
  opts.max_evaluations = settings.evaluations_per_restart;
  std::vector<double> start = seed;
  for (int r = 0; r < settings.restarts; ++r) {
    // Restarts shrink and flip the initial simplex around the incumbent.
    std::vector<double> step(seed.size());
    const double scale = std::pow(0.5, r) * (r % 2 == 0 ? 1.0 : -1.0);
    for (std::size_t i = 0; i < seed.size(); ++i) step[i] = settings.steps[i] * scale;
    nelder_mead(objective, start, step, bounds, opts);
    start = {out.freq, out.amp};
    if (seed.size() > 2) start.push_back(out.bias);
  }
  out.success = out.objective <= settings.stagnation;
  if (!out.success) out.message = "optimizer stagnated: objective " + std::to_string(out.objective);
  return out;
}

CzSeed physics_seed(const CompositeModel& model, const GateConfig& cfg,
                    const PropagatorOptions& options) {
  cfg.validate();
  const BareLabel k11{1, 0, 1}, k22{2, 0, 2};
  const double flux = cfg.drive_flux();
  const DressedFrame fr = dressed_frame(model, flux);
  const double gap = fr.spectrum.energy(k22) - fr.spectrum.energy(k11);
  const double window =
      (cfg.mode == BiasMode::dynamic_bias ? cfg.gate_time - 2.0 * cfg.bias_ramp : cfg.gate_time) -
      cfg.drive_ramp;
  // A full |11> -> |22> -> |11> cycle (sign flip) takes 1/(2g).
  const double g_target = 0.5 / window;
  const double ref = 0.02;
  const TransitionScan lin =
      extract_transition(model, flux, ref, {k11, k22}, {gap - 0.012, gap + 0.012}, 0.004, options);
  if (!lin.found) throw SearchError("no bSWAP resonance near the dressed gap: " + lin.message);
  double amp = std::clamp(ref * g_target / lin.strength, cfg.amp_bounds.first, cfg.amp_bounds.second);
  const TransitionScan at =
      extract_transition(model, flux, amp, {k11, k22}, {gap - 0.05, gap + 0.01}, 0.005, options);
  if (!at.found) return {std::clamp(lin.freq, cfg.freq_bounds.first, cfg.freq_bounds.second), amp};
  // Correct the amplitude for the nonlinear strength; the drive-induced shift
  // grows quadratically.
  const double amp2 =
      std::clamp(amp * g_target / at.strength, cfg.amp_bounds.first, cfg.amp_bounds.second);
  const double freq = gap + (at.freq - gap) * (amp2 * amp2) / (amp * amp);
  return {std::clamp(freq, cfg.freq_bounds.first, cfg.freq_bounds.second), amp2};
}

CzOptimum optimize_cz(const GateLab& lab, const GateConfig& cfg, const std::optional<CzSeed>& seed,
                      const OptimizerSettings& settings) {
  cfg.validate();
  const CzSeed s = seed ? *seed : physics_seed(lab.model(), cfg, lab.options());
  std::vector<double> x0{s.freq, s.amp};
  std::vector<std::pair<double, double>> bounds{cfg.freq_bounds, cfg.amp_bounds};
  if (cfg.optimize_bias) {
    x0.push_back(std::clamp(cfg.drive_flux(), cfg.bias_bounds.first, cfg.bias_bounds.second));
    bounds.push_back(cfg.bias_bounds);
  }
  auto eval = [&](const std::vector<double>& x) {
    return lab.evaluate(cfg, x[0], x[1], x.size() > 2 ? std::optional<double>(x[2]) : std::nullopt);
  };
  CzOptimum out = optimize_cz_with(eval, x0, bounds, settings);
  if (!cfg.optimize_bias) out.bias = cfg.drive_flux();
  return out;
}

std::vector<LengthPoint> error_vs_length(const GateLab& lab, const GateConfig& cfg,
                                         const std::vector<double>& gate_times,
                                         const std::vector<double>& drive_ramps,
                                         const OptimizerSettings& settings, int workers) {
  if (gate_times.empty() || drive_ramps.empty()) throw std::invalid_argument("empty sweep grid");
  if (workers < 1) throw std::invalid_argument("worker count must be at least 1");
  std::vector<LengthPoint> out;
  for (double r : drive_ramps)
    for (double t : gate_times) {
      if (t < 2.0 * r + 10.0)
        throw std::invalid_argument("gate time " + std::to_string(t) + " ns below 2 t_r + 10 ns");
      out.push_back({t, r, {}, {}});
    }
  const int n = static_cast<int>(out.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int k = 0; k < n; ++k) {
    GateConfig c = cfg;
    c.gate_time = out[k].gate_time;
    c.drive_ramp = out[k].drive_ramp;
    try {
      out[k].optimum = optimize_cz(lab, c, std::nullopt, settings);
      if (!out[k].optimum.success) out[k].failure = out[k].optimum.message;
    } catch (const std::exception& e) {
      out[k].failure = e.what();
    }
  }
  return out;
}

}  // namespace fluxcz
