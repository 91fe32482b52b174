#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "fluxcz/dynamics.hpp"

namespace fluxcz {

// Steady drive Φ(t) = Φ_s + δ_Φ cos(2π f t).
struct FloquetDrive {
  double flux_static = 0.0;
  double drive_amp = 0.0;
  double drive_freq = 0.0;  // GHz

  double period() const { return 1.0 / drive_freq; }
  void validate() const;
};

// One-period propagator U(t0 + T, t0) in the oscillator basis at Φ_s.
Eigen::MatrixXcd monodromy(const CompositeModel& model, const FloquetDrive& drive, double t0 = 0.0,
                           const PropagatorOptions& options = {});

// Folds a quasienergy into [-f/2, f/2).
double fold_quasienergy(double e, double freq);

struct FloquetSpectrum {
  Eigen::VectorXd quasienergies;  // GHz, folded
  Eigen::MatrixXcd vectors;       // Floquet states as dressed-frame amplitudes
  std::vector<BareLabel> labels;
  std::vector<double> overlaps;  // |<dressed label|Floquet state>|
  std::vector<bool> ambiguous;
  bool degenerate = false;  // two eigenphases closer than 1e-9
  FloquetDrive drive;
};

// Labels come from one-to-one maximal overlap with the dressed eigenstates of
// `frame`, whose flux must equal Φ_s.
FloquetSpectrum quasienergies(const CompositeModel& model, const Eigen::MatrixXcd& monodromy,
                              const FloquetDrive& drive, const DressedFrame& frame,
                              double threshold = 0.5);

struct TransitionScan {
  bool found = false;
  double freq = 0.0;      // GHz, resonant drive frequency
  double strength = 0.0;  // GHz, half the minimal quasienergy gap
  std::vector<double> freqs;
  std::vector<double> gaps;  // tracked pair gap per scanned frequency
  std::string message;
};

// Scans the drive frequency over `window`, tracks the Floquet pair that
// starts on (a, b) through subspace continuity, and refines the minimal gap.
TransitionScan extract_transition(const CompositeModel& model, double flux_static,
                                  double drive_amp, const std::pair<BareLabel, BareLabel>& pair,
                                  const std::pair<double, double>& window, double resolution,
                                  const PropagatorOptions& options = {}, int workers = 1);

}  // namespace fluxcz
