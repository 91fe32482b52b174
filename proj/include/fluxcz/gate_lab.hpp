#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluxcz/dynamics.hpp"
#include "fluxcz/optimizer.hpp"

namespace fluxcz {

enum class BiasMode { dynamic_bias, static_bias };

std::string to_string(BiasMode m);
BiasMode parse_bias_mode(const std::string& s);

struct GateConfig {
  BiasMode mode = BiasMode::dynamic_bias;
  double flux_idle = 0.0;
  double flux_interaction = 0.35;
  double bias_ramp = 3.0;   // ns
  double drive_ramp = 5.0;  // ns
  double gate_time = 65.0;  // ns
  std::pair<double, double> freq_bounds{10.5, 11.1};  // GHz
  std::pair<double, double> amp_bounds{0.0, 0.15};
  // Optional third optimization parameter: the interaction bias.
  bool optimize_bias = false;
  std::pair<double, double> bias_bounds{0.30, 0.40};

  void validate() const;
  // Flux held while the drive is on.
  double drive_flux() const { return mode == BiasMode::dynamic_bias ? flux_interaction : flux_idle; }
};

struct GateMetrics {
  double fidelity = 0.0;
  double error = 1.0;
  double leakage = 0.0;
  double conditional_phase = 0.0;              // radians in [0, 2π)
  std::array<double, 2> single_qubit_phases{};  // Z angles removed on (Q0, Q1)
  bool phase_unreliable = false;
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();  // after Z removal
  // Final dressed populations from each computational initial state.
  std::vector<BareLabel> labels;
  Eigen::Matrix<double, Eigen::Dynamic, 4> populations;
};

// Fidelity, leakage and conditional phase of a truncated 4×4 propagator in
// the order |00>, |01>, |10>, |11> (Q0 first).
GateMetrics gate_metrics(const Eigen::Matrix4cd& u);

// leakage + (conditional phase - π)²/π², with the phase wrapped to (-π, π].
double cz_objective(const GateMetrics& m);

struct CoherenceTimes {
  double t1_22 = 0.0;    // μs
  double tphi_22 = 0.0;  // μs
};

double incoherent_error(double gate_time_ns, const CoherenceTimes& times);

struct LeakageChannel {
  BareLabel from;
  BareLabel to;
  double population = 0.0;
};

// Non-computational final populations above `threshold`, largest first.
std::vector<LeakageChannel> leakage_channels(const GateMetrics& m, int top_k,
                                             double threshold = 1e-10);

// Evaluates CZ candidates for one circuit. The bias-ramp segments do not
// depend on the drive and are cached. Thread safe.
class GateLab {
 public:
  GateLab(const CompositeModel& model, PropagatorOptions options = {});

  const CompositeModel& model() const { return model_; }
  const PropagatorOptions& options() const { return options_; }

  // The schedule for a candidate; `bias` overrides the interaction flux.
  std::pair<ParametricPulse, std::optional<BiasRamp>> schedule(
      const GateConfig& cfg, double freq, double amp, std::optional<double> bias = {}) const;

  GateMetrics evaluate(const GateConfig& cfg, double freq, double amp,
                       std::optional<double> bias = {}) const;

 private:
  const Eigen::MatrixXcd& ramp_propagator(const FluxSchedule& s, bool up) const;
  const DressedFrame& frame(double flux) const;

  const CompositeModel& model_;
  PropagatorOptions options_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<bool, double, double, double>, std::shared_ptr<Eigen::MatrixXcd>> ramps_;
  mutable std::map<double, std::shared_ptr<DressedFrame>> frames_;
};

GateMetrics evaluate_gate(const CompositeModel& model, const GateConfig& cfg, double freq,
                          double amp, const PropagatorOptions& options = {});

struct TracePoint {
  std::vector<double> x;  // (freq, amp[, bias])
  double objective = 0.0;
};

struct CzOptimum {
  bool success = false;
  double freq = 0.0;
  double amp = 0.0;
  double bias = 0.0;
  double objective = 0.0;
  GateMetrics metrics;
  std::vector<TracePoint> trace;
  std::string message;
};

struct CzSeed {
  double freq = 0.0;
  double amp = 0.0;
};

struct OptimizerSettings {
  int restarts = 3;
  int evaluations_per_restart = 400;
  double stagnation = 1e-2;
  std::vector<double> steps{0.004, 0.004, 0.005};  // initial simplex edges (freq, amp, bias)
};

// Generic driver: minimizes cz_objective over (freq, amp[, bias]) with
// deterministic restarts. `evaluate` maps a parameter vector to metrics.
CzOptimum optimize_cz_with(const std::function<GateMetrics(const std::vector<double>&)>& evaluate,
                           const std::vector<double>& seed,
                           const std::vector<std::pair<double, double>>& bounds,
                           const OptimizerSettings& settings = {});

// Seed from the Floquet resonance and the amplitude whose bSWAP period fits
// the flat-top time.
CzSeed physics_seed(const CompositeModel& model, const GateConfig& cfg,
                    const PropagatorOptions& options = {});

CzOptimum optimize_cz(const GateLab& lab, const GateConfig& cfg,
                      const std::optional<CzSeed>& seed = std::nullopt,
                      const OptimizerSettings& settings = {});

struct LengthPoint {
  double gate_time = 0.0;
  double drive_ramp = 0.0;
  CzOptimum optimum;
  std::string failure;
};

// Optimizes each (ramp, gate time) pair; points run on `workers` threads.
std::vector<LengthPoint> error_vs_length(const GateLab& lab, const GateConfig& cfg,
                                         const std::vector<double>& gate_times,
                                         const std::vector<double>& drive_ramps,
                                         const OptimizerSettings& settings = {}, int workers = 1);

}  // namespace fluxcz
