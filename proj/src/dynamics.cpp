#include "fluxcz/dynamics.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fluxcz/errors.hpp"

namespace fluxcz {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDriftLimit = 1e-8;

}  // namespace

void ParametricPulse::validate() const {
  if (drive_amp < 0.0) throw std::invalid_argument("drive amplitude must be non-negative");
  if (drive_freq < 0.0) throw std::invalid_argument("drive frequency must be non-negative");
  if (gate_time <= 0.0) throw std::invalid_argument("gate time must be positive");
  if (ramp_time < 0.0 || 2.0 * ramp_time > gate_time)
    throw std::invalid_argument("ramp time must satisfy 0 <= 2 t_r <= t_g");
}

void BiasRamp::validate() const {
  if (ramp_time <= 0.0) throw std::invalid_argument("bias ramp time must be positive");
  if (lead < 0.0 || lag < 0.0) throw std::invalid_argument("bias lead/lag must be non-negative");
}

double flat_top(double t, double length, double ramp) {
  if (t < 0.0 || t > length) return 0.0;
  if (ramp <= 0.0) return 1.0;
  if (t < ramp) return 0.5 * (1.0 - std::cos(kPi * t / ramp));
  if (t > length - ramp) return 0.5 * (1.0 - std::cos(kPi * (length - t) / ramp));
  return 1.0;
}

double flat_top_rate(double t, double length, double ramp) {
  if (t < 0.0 || t > length || ramp <= 0.0) return 0.0;
  if (t < ramp) return 0.5 * kPi / ramp * std::sin(kPi * t / ramp);
  if (t > length - ramp) return -0.5 * kPi / ramp * std::sin(kPi * (length - t) / ramp);
  return 0.0;
}

FluxSchedule::FluxSchedule(const ParametricPulse& pulse, std::optional<BiasRamp> ramp)
    : pulse_(pulse), ramp_(std::move(ramp)) {
  pulse_.validate();
  if (ramp_) {
    ramp_->validate();
    if (std::abs(ramp_->flux_interaction - pulse_.flux_static) > 1e-12)
      throw std::invalid_argument("bias ramp interaction flux must equal the static bias");
    if (2.0 * ramp_->ramp_time > pulse_.gate_time)
      throw std::invalid_argument("bias ramps do not fit in the gate time");
    if (2.0 * pulse_.ramp_time > drive_stop() - drive_start())
      throw std::invalid_argument("drive ramps do not fit between lead and lag");
  }
}

double FluxSchedule::drive_start() const { return ramp_ ? ramp_->lead : 0.0; }
double FluxSchedule::drive_stop() const {
  return ramp_ ? pulse_.gate_time - ramp_->lag : pulse_.gate_time;
}
double FluxSchedule::frame_flux() const { return ramp_ ? ramp_->flux_idle : pulse_.flux_static; }

double FluxSchedule::bias(double t) const {
  if (!ramp_) return pulse_.flux_static;
  const double e = flat_top(t, pulse_.gate_time, ramp_->ramp_time);
  return ramp_->flux_idle + (ramp_->flux_interaction - ramp_->flux_idle) * e;
}

double FluxSchedule::flux(double t) const {
  const double a = drive_start();
  const double env = flat_top(t - a, drive_stop() - a, pulse_.ramp_time);
  return bias(t) +
         pulse_.drive_amp * env * std::cos(2.0 * kPi * pulse_.drive_freq * t + pulse_.drive_phase);
}

double FluxSchedule::rate(double t) const {
  double r = 0.0;
  if (ramp_)
    r += (ramp_->flux_interaction - ramp_->flux_idle) *
         flat_top_rate(t, pulse_.gate_time, ramp_->ramp_time);
  const double a = drive_start(), len = drive_stop() - a;
  const double w = 2.0 * kPi * pulse_.drive_freq;
  const double arg = w * t + pulse_.drive_phase;
  r += pulse_.drive_amp * (flat_top_rate(t - a, len, pulse_.ramp_time) * std::cos(arg) -
                           flat_top(t - a, len, pulse_.ramp_time) * w * std::sin(arg));
  return r;
}

std::optional<FluxSchedule::Window> FluxSchedule::periodic_window() const {
  Window w;
  w.begin = drive_start() + pulse_.ramp_time;
  w.end = drive_stop() - pulse_.ramp_time;
  if (ramp_) {
    w.begin = std::max(w.begin, ramp_->ramp_time);
    w.end = std::min(w.end, pulse_.gate_time - ramp_->ramp_time);
  }
  const bool oscillating = pulse_.drive_amp > 0.0 && pulse_.drive_freq > 0.0;
  // A constant Hamiltonian repeats with any period.
  w.period = oscillating ? 1.0 / pulse_.drive_freq : 0.1;
  if (w.end - w.begin < 2.0 * w.period) return std::nullopt;
  return w;
}

double flux_waveform(const ParametricPulse& pulse, const std::optional<BiasRamp>& ramp, double t) {
  if (t < 0.0) throw std::invalid_argument("flux waveform needs t >= 0");
  return FluxSchedule(pulse, ramp).flux(t);
}

Propagator::Propagator(const CompositeModel& model, PropagatorOptions options)
    : model_(model), options_(options) {
  if (!(options_.dt > 0.0)) throw std::invalid_argument("time step must be positive");
}

void Propagator::step(const FluxSchedule& s, double t, double h, Block& x,
                      ExpvWorkspace& ws) const {
  // Commutator-free fourth-order Magnus: two exponentials of Gauss-node
  // combinations, the earlier node weighted more in the first.
  static const double r3 = std::sqrt(3.0);
  const double c1 = 0.5 - r3 / 6.0, c2 = 0.5 + r3 / 6.0;
  const double a = 0.25 + r3 / 6.0, b = 0.25 - r3 / 6.0;
  const double f1 = t + c1 * h, f2 = t + c2 * h;
  const TermWeights w1 = model_.weights(s.flux(f1), s.rate(f1));
  const TermWeights w2 = model_.weights(s.flux(f2), s.rate(f2));
  const HamiltonianParts& parts = model_.parts();
  matvecs_ += expv(parts, combine(a, w1, b, w2), h, x, ws, options_.parallel_kernels);
  matvecs_ += expv(parts, combine(b, w1, a, w2), h, x, ws, options_.parallel_kernels);
}

void Propagator::evolve(const FluxSchedule& s, double t0, double t1, Block& x) const {
  if (t1 == t0) return;
  const double span = t1 - t0;
  const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(span) / options_.dt - 1e-9)));
  const double h = span / static_cast<double>(n);
  ExpvWorkspace ws;
  for (long k = 0; k < n; ++k) step(s, t0 + static_cast<double>(k) * h, h, x, ws);
}

Eigen::MatrixXcd Propagator::propagator(const FluxSchedule& s, double t0, double t1) const {
  const int d = model_.dimension();
  Block x = Block::Identity(d, d);
  evolve(s, t0, t1, x);
  return x;
}

void Propagator::run(const FluxSchedule& s, double t0, double t1, Block& x,
                     const std::vector<double>& record_times, const Recorder& on_record) const {
  if (!std::is_sorted(record_times.begin(), record_times.end()))
    throw std::invalid_argument("record times must be sorted");
  for (double r : record_times)
    if (r < t0 - 1e-12 || r > t1 + 1e-12)
      throw std::invalid_argument("record time outside the propagation interval");

  std::size_t next = 0;
  double tc = t0;
  auto plain_until = [&](double stop) {
    for (; next < record_times.size() && record_times[next] <= stop; ++next) {
      evolve(s, tc, record_times[next], x);
      tc = record_times[next];
      if (on_record) on_record(static_cast<int>(next), x);
    }
    evolve(s, tc, stop, x);
    tc = stop;
  };

  std::optional<FluxSchedule::Window> win;
  if (options_.periodic) win = s.periodic_window();
  long periods = 0;
  double wb = 0.0;
  if (win) {
    wb = std::max(win->begin, t0);
    const double we = std::min(win->end, t1);
    periods = we > wb ? static_cast<long>(std::floor((we - wb) / win->period)) : 0;
  }
  if (periods < 2) {
    plain_until(t1);
    return;
  }

  const double period = win->period;
  plain_until(wb);
  std::vector<Eigen::MatrixXcd> powers{propagator(s, wb, wb + period)};
  // x <- M^n x via binary powers.
  auto advance = [&](Block& y, long n) {
    for (int j = 0; n > 0; ++j, n >>= 1) {
      if (j == static_cast<int>(powers.size())) powers.push_back(powers.back() * powers.back());
      if (n & 1) y = (powers[j] * y).eval();
    }
  };
  long at = 0;
  const double wend = wb + static_cast<double>(periods) * period;
  for (; next < record_times.size() && record_times[next] < wend; ++next) {
    const double r = record_times[next];
    const long k = std::min(periods, static_cast<long>(std::floor((r - wb) / period)));
    advance(x, k - at);
    at = k;
    Block y = x;
    evolve(s, wb + static_cast<double>(k) * period, r, y);
    if (on_record) on_record(static_cast<int>(next), y);
  }
  advance(x, periods - at);
  tc = wend;
  plain_until(t1);
}

double fastest_frequency(const CompositeModel& model, const FluxSchedule& s) {
  const int nf = model.n_flux();
  double f = s.pulse().drive_freq;
  f = std::max(f, model.q0_spectrum().energies[nf - 1]);
  f = std::max(f, model.q1_spectrum().energies[nf - 1]);
  f = std::max(f, model.coupler(0.0).omega_c);
  return f;
}

void check_time_step(const CompositeModel& model, const FluxSchedule& s, double dt) {
  const double limit = 1.0 / (40.0 * fastest_frequency(model, s));
  if (dt > limit) {
    std::ostringstream msg;
    msg << "time step " << dt << " ns exceeds 1/(40 f_max) = " << limit << " ns";
    throw std::invalid_argument(msg.str());
  }
}

InitialState InitialState::computational_superposition() {
  InitialState s;
  for (const BareLabel& l : computational_labels()) s.components.emplace_back(l, 0.5);
  return s;
}

std::vector<BareLabel> computational_labels() {
  return {{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 0, 1}};
}

DressedFrame dressed_frame(const CompositeModel& model, double flux) {
  return {flux, label_eigenstates(model.hamiltonian(flux))};
}

Block to_dressed(const CompositeModel& model, const DressedFrame& frame, double flux, double t,
                 const Block& x) {
  const Eigen::MatrixXd b = model.basis_change(flux, frame.flux);
  const Eigen::MatrixXd m = frame.spectrum.vectors.transpose() * b;
  Block y = m.cast<cplx>() * x;
  for (int i = 0; i < y.rows(); ++i)
    y.row(i) *= std::exp(cplx(0.0, 2.0 * kPi * frame.spectrum.energies[i] * t));
  return y;
}

Block from_dressed(const CompositeModel& model, const DressedFrame& frame, double flux,
                   const Block& amplitudes) {
  const Eigen::MatrixXd m = model.basis_change(frame.flux, flux) * frame.spectrum.vectors;
  return m.cast<cplx>() * amplitudes;
}

namespace {

Block initial_amplitudes(const DressedFrame& frame, const InitialState& psi0) {
  if (psi0.components.empty()) throw std::invalid_argument("empty initial state");
  const LabeledSpectrum& levels = frame.spectrum;
  Block a = Block::Zero(levels.energies.size(), 1);
  for (const auto& [label, c] : psi0.components) {
    if (levels.is_ambiguous(label))
      throw LabelingError("initial label " + label.str() + " is ambiguous at the frame flux");
    a(levels.dressed_index(label), 0) += c;
  }
  const double n = a.norm();
  if (n == 0.0) throw std::invalid_argument("initial state has zero norm");
  return a / n;
}

double max_norm_drift(const Block& x) {
  double d = 0.0;
  for (int j = 0; j < x.cols(); ++j) d = std::max(d, std::abs(x.col(j).norm() - 1.0));
  return d;
}

void check_drift(double drift) {
  if (drift > kDriftLimit) {
    std::ostringstream msg;
    msg << "norm drift " << drift << " exceeds " << kDriftLimit;
    throw IntegrationError(msg.str(), drift);
  }
}

std::vector<int> observed_indices(const LabeledSpectrum& levels,
                                  const std::vector<BareLabel>& observed) {
  std::vector<int> idx;
  for (const BareLabel& l : observed.empty() ? computational_labels() : observed)
    idx.push_back(levels.dressed_index(l));
  return idx;
}

double summed_population(const Block& y, const std::vector<int>& idx) {
  double p = 0.0;
  for (int i : idx) p += std::norm(y(i, 0));
  return p;
}

}  // namespace

EvolutionResult propagate_state(const CompositeModel& model, const ParametricPulse& pulse,
                                const std::optional<BiasRamp>& ramp, const InitialState& psi0,
                                const std::vector<double>& times,
                                const std::vector<BareLabel>& record,
                                const PropagatorOptions& options) {
  const FluxSchedule s(pulse, ramp);
  check_time_step(model, s, options.dt);
  const DressedFrame frame = dressed_frame(model, s.frame_flux());
  const Propagator prop(model, options);

  EvolutionResult out;
  out.times = times.empty() ? std::vector<double>{pulse.gate_time} : times;
  for (double t : out.times)
    if (t < 0.0) throw std::invalid_argument("record times must be non-negative");
  out.labels = record;
  out.populations.assign(record.size(), std::vector<double>(out.times.size(), 0.0));
  out.computational_population.assign(out.times.size(), 0.0);
  const std::vector<int> comp = observed_indices(frame.spectrum, {});
  std::vector<int> rec;
  for (const BareLabel& l : record) rec.push_back(frame.spectrum.dressed_index(l));

  Block x = from_dressed(model, frame, s.flux(0.0), initial_amplitudes(frame, psi0));
  const double t_end = *std::max_element(out.times.begin(), out.times.end());
  Block last;
  prop.run(s, 0.0, t_end, x, out.times, [&](int k, const Block& xk) {
    out.norm_drift = std::max(out.norm_drift, max_norm_drift(xk));
    const Block y = to_dressed(model, frame, s.flux(out.times[k]), out.times[k], xk);
    for (std::size_t r = 0; r < rec.size(); ++r) out.populations[r][k] = std::norm(y(rec[r], 0));
    out.computational_population[k] = summed_population(y, comp);
    if (out.times[k] == t_end) last = y;
  });
  out.norm_drift = std::max(out.norm_drift, max_norm_drift(x));
  out.final_state = last.col(0);
  check_drift(out.norm_drift);
  return out;
}

ComputationalPropagator propagate_computational_unitary(const CompositeModel& model,
                                                        const ParametricPulse& pulse,
                                                        const std::optional<BiasRamp>& ramp,
                                                        const PropagatorOptions& options) {
  const FluxSchedule s(pulse, ramp);
  check_time_step(model, s, options.dt);
  ComputationalPropagator out;
  out.frame = dressed_frame(model, s.frame_flux());
  const LabeledSpectrum& levels = out.frame.spectrum;
  const std::vector<BareLabel> comp = computational_labels();
  Block a = Block::Zero(model.dimension(), 4);
  for (int j = 0; j < 4; ++j) {
    if (levels.is_ambiguous(comp[j]))
      throw LabelingError("computational label " + comp[j].str() + " is ambiguous");
    a(levels.dressed_index(comp[j]), j) = 1.0;
  }
  Block x = from_dressed(model, out.frame, s.flux(0.0), a);
  Propagator(model, options).run(s, 0.0, pulse.gate_time, x);
  out.norm_drift = max_norm_drift(x);
  check_drift(out.norm_drift);
  out.columns = to_dressed(model, out.frame, s.flux(pulse.gate_time), pulse.gate_time, x);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.u(i, j) = out.columns(levels.dressed_index(comp[i]), j);
  for (int j = 0; j < 4; ++j) out.leakage[j] = std::max(0.0, 1.0 - out.u.col(j).squaredNorm());
  return out;
}

namespace {

int thread_count(int workers) {
  if (workers < 1) throw std::invalid_argument("worker count must be at least 1");
  return workers;
}

}  // namespace

PopulationMap chevron_scan(const CompositeModel& model, const ParametricPulse& templ,
                           const std::vector<double>& freqs, const std::vector<double>& times,
                           const InitialState& psi0, const std::vector<BareLabel>& observed,
                           const PropagatorOptions& options, int workers) {
  if (freqs.empty() || times.empty()) throw std::invalid_argument("scan grids must be nonempty");
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0)
    throw std::invalid_argument("time grid must be sorted and non-negative");
  PopulationMap out;
  out.freqs = freqs;
  out.axis = times;
  out.values = Eigen::MatrixXd::Constant(freqs.size(), times.size(), std::nan(""));
  out.failures.assign(freqs.size(), "");
  const DressedFrame frame = dressed_frame(model, templ.flux_static);
  const std::vector<int> idx = observed_indices(frame.spectrum, observed);
  const Block a0 = initial_amplitudes(frame, psi0);

  const int n = static_cast<int>(freqs.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(workers))
  for (int f = 0; f < n; ++f) {
    try {
      ParametricPulse p = templ;
      p.drive_freq = freqs[f];
      p.gate_time = std::max(templ.gate_time, times.back());
      const FluxSchedule s(p);
      check_time_step(model, s, options.dt);
      Block x = from_dressed(model, frame, s.flux(0.0), a0);
      double drift = 0.0;
      Propagator(model, options).run(s, 0.0, times.back(), x, times, [&](int k, const Block& xk) {
        drift = std::max(drift, max_norm_drift(xk));
        const Block y = to_dressed(model, frame, s.flux(times[k]), times[k], xk);
        out.values(f, k) = summed_population(y, idx);
      });
      check_drift(drift);
    } catch (const std::exception& e) {
      out.failures[f] = e.what();
    }
  }
  return out;
}

PopulationMap amplitude_scan(const CompositeModel& model, const ParametricPulse& templ,
                             const std::vector<double>& freqs, const std::vector<double>& amps,
                             double fixed_time, const InitialState& psi0,
                             const std::vector<BareLabel>& observed,
                             const PropagatorOptions& options, int workers) {
  if (freqs.empty() || amps.empty()) throw std::invalid_argument("scan grids must be nonempty");
  if (fixed_time <= 0.0) throw std::invalid_argument("fixed time must be positive");
  PopulationMap out;
  out.freqs = freqs;
  out.axis = amps;
  out.values = Eigen::MatrixXd::Constant(freqs.size(), amps.size(), std::nan(""));
  out.failures.assign(freqs.size(), "");
  const DressedFrame frame = dressed_frame(model, templ.flux_static);
  const std::vector<int> idx = observed_indices(frame.spectrum, observed);
  const Block a0 = initial_amplitudes(frame, psi0);

  const int na = static_cast<int>(amps.size());
  const int n = static_cast<int>(freqs.size()) * na;
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(workers))
  for (int q = 0; q < n; ++q) {
    const int f = q / na, k = q % na;
    try {
      ParametricPulse p = templ;
      p.drive_freq = freqs[f];
      p.drive_amp = amps[k];
      p.gate_time = fixed_time;
      const FluxSchedule s(p);
      check_time_step(model, s, options.dt);
      Block x = from_dressed(model, frame, s.flux(0.0), a0);
      Propagator(model, options).run(s, 0.0, fixed_time, x);
      check_drift(max_norm_drift(x));
      out.values(f, k) = summed_population(to_dressed(model, frame, s.flux(fixed_time), fixed_time, x), idx);
    } catch (const std::exception& e) {
      errors[q] = e.what();
    }
  }
  for (int q = 0; q < n; ++q)
    if (!errors[q].empty() && out.failures[q / na].empty())
      out.failures[q / na] = "amplitude " + std::to_string(amps[q % na]) + ": " + errors[q];
  return out;
}

}  // namespace fluxcz
