#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluxcz/composite_system.hpp"
#include "fluxcz/kernels.hpp"

namespace fluxcz {

// Times in ns, frequencies in GHz, fluxes in flux quanta.
struct ParametricPulse {
  double flux_static = 0.0;
  double drive_amp = 0.0;
  double drive_freq = 0.0;
  double drive_phase = 0.0;  // radians
  double ramp_time = 0.0;    // drive envelope rise/fall
  double gate_time = 0.0;

  void validate() const;
};

// Coupler bias excursion from idle to the interaction flux. The drive is
// confined to [lead, gate_time - lag].
struct BiasRamp {
  double flux_idle = 0.0;
  double flux_interaction = 0.0;
  double ramp_time = 3.0;
  double lead = 3.0;
  double lag = 3.0;

  void validate() const;
};

// Flat-top cosine envelope on [0, length] with rise/fall `ramp`.
double flat_top(double t, double length, double ramp);
double flat_top_rate(double t, double length, double ramp);

class FluxSchedule {
 public:
  FluxSchedule(const ParametricPulse& pulse, std::optional<BiasRamp> ramp = std::nullopt);

  double flux(double t) const;
  double rate(double t) const;  // dΦ/dt in 1/ns
  double duration() const { return pulse_.gate_time; }
  double bias(double t) const;
  double drive_start() const;
  double drive_stop() const;
  // Flux of the measurement frame: the idle bias, or the static bias.
  double frame_flux() const;

  const ParametricPulse& pulse() const { return pulse_; }
  const std::optional<BiasRamp>& ramp() const { return ramp_; }

  // Interval on which the waveform repeats with the returned period.
  struct Window {
    double begin = 0.0;
    double end = 0.0;
    double period = 0.0;
  };
  std::optional<Window> periodic_window() const;

 private:
  ParametricPulse pulse_;
  std::optional<BiasRamp> ramp_;
};

double flux_waveform(const ParametricPulse& pulse, const std::optional<BiasRamp>& ramp, double t);

struct PropagatorOptions {
  double dt = 0.0015;  // ns
  bool periodic = true;
  bool parallel_kernels = false;
};

// Fourth-order commutator-free Magnus stepping. State coefficients at time t
// are in the coupler oscillator basis at Φ(t).
class Propagator {
 public:
  Propagator(const CompositeModel& model, PropagatorOptions options = {});

  const CompositeModel& model() const { return model_; }
  const PropagatorOptions& options() const { return options_; }

  // Plain stepping from t0 to t1 (t1 < t0 runs backwards).
  void evolve(const FluxSchedule& s, double t0, double t1, Block& x) const;

  // Propagator over [t0, t0 + period] as a dense matrix.
  Eigen::MatrixXcd propagator(const FluxSchedule& s, double t0, double t1) const;

  using Recorder = std::function<void(int, const Block&)>;

  // Evolves from t0 to t1, using the one-period propagator to jump across the
  // periodic window when enabled. `record_times` must be sorted within
  // [t0, t1]; `on_record(i, x)` sees the state at record_times[i].
  void run(const FluxSchedule& s, double t0, double t1, Block& x,
           const std::vector<double>& record_times = {}, const Recorder& on_record = {}) const;

  long matvecs() const { return matvecs_; }

 private:
  void step(const FluxSchedule& s, double t, double h, Block& x, ExpvWorkspace& ws) const;

  const CompositeModel& model_;
  PropagatorOptions options_;
  mutable long matvecs_ = 0;
};

// Largest frequency the time step must resolve: the drive and the largest
// single-circuit transition kept in the model.
double fastest_frequency(const CompositeModel& model, const FluxSchedule& s);
void check_time_step(const CompositeModel& model, const FluxSchedule& s, double dt);

struct InitialState {
  std::vector<std::pair<BareLabel, cplx>> components;

  static InitialState basis(const BareLabel& l) { return {{{l, 1.0}}}; }
  // Equal-weight, equal-phase superposition of the four computational states.
  static InitialState computational_superposition();
};

std::vector<BareLabel> computational_labels();

// Dressed eigenbasis of the measurement frame.
struct DressedFrame {
  double flux = 0.0;
  LabeledSpectrum spectrum;
};
DressedFrame dressed_frame(const CompositeModel& model, double flux);

struct EvolutionResult {
  std::vector<double> times;
  std::vector<BareLabel> labels;
  std::vector<std::vector<double>> populations;  // [label][time]
  std::vector<double> computational_population;  // summed over the computational states
  Eigen::VectorXcd final_state;                  // dressed-frame amplitudes at the last time
  double norm_drift = 0.0;
};

EvolutionResult propagate_state(const CompositeModel& model, const ParametricPulse& pulse,
                                const std::optional<BiasRamp>& ramp, const InitialState& psi0,
                                const std::vector<double>& times,
                                const std::vector<BareLabel>& record,
                                const PropagatorOptions& options = {});

struct ComputationalPropagator {
  Eigen::Matrix4cd u;                 // rotating-frame corrected, dressed frame
  Eigen::Matrix<cplx, Eigen::Dynamic, 4> columns;  // all dressed amplitudes, same frame
  std::array<double, 4> leakage{};
  double norm_drift = 0.0;
  DressedFrame frame;
};

ComputationalPropagator propagate_computational_unitary(const CompositeModel& model,
                                                        const ParametricPulse& pulse,
                                                        const std::optional<BiasRamp>& ramp,
                                                        const PropagatorOptions& options = {});

// Converts state blocks between the oscillator basis at Φ(t) and dressed
// frame amplitudes, including the e^{+i2πE t} rotating-frame factor.
Block to_dressed(const CompositeModel& model, const DressedFrame& frame, double flux, double t,
                 const Block& x);
Block from_dressed(const CompositeModel& model, const DressedFrame& frame, double flux,
                   const Block& amplitudes);

struct PopulationMap {
  std::vector<double> freqs;
  std::vector<double> axis;  // times (chevron) or drive amplitudes (amplitude scan)
  Eigen::MatrixXd values;    // [freq][axis]
  std::vector<std::string> failures;  // per frequency row, empty on success
};

// Observable: summed population of `observed` labels; empty means the
// computational subspace. Scan points run on `workers` threads.
PopulationMap chevron_scan(const CompositeModel& model, const ParametricPulse& templ,
                           const std::vector<double>& freqs, const std::vector<double>& times,
                           const InitialState& psi0, const std::vector<BareLabel>& observed,
                           const PropagatorOptions& options = {}, int workers = 1);

PopulationMap amplitude_scan(const CompositeModel& model, const ParametricPulse& templ,
                             const std::vector<double>& freqs, const std::vector<double>& amps,
                             double fixed_time, const InitialState& psi0,
                             const std::vector<BareLabel>& observed,
                             const PropagatorOptions& options = {}, int workers = 1);

}  // namespace fluxcz
