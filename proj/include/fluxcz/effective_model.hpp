#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluxcz/circuit_spectra.hpp"
#include "fluxcz/composite_system.hpp"

namespace fluxcz {

// Plasmon transitions j->l of Q0 and r->t of Q1.
struct PlasmonModeSelection {
  std::pair<int, int> q0_pair{1, 2};
  std::pair<int, int> q1_pair{1, 2};

  void validate(int n_levels) const;
};

struct EffectiveCouplings {
  double g_pc0 = 0.0;
  double g_pc1 = 0.0;
  double g_p01 = 0.0;
  double g_p = 0.0;
  std::array<double, 2> omega_p{};  // plasmon frequencies used for deltas/sums
  std::array<double, 2> deltas{};   // ω_p,k - ω_c
  std::array<double, 2> sums{};     // ω_p,k + ω_c
  std::vector<std::string> warnings;
};

struct ParametricCoupling {
  double g_eff = 0.0;
  double drive_amp = 0.0;
  double derivative = 0.0;      // ∂ω_c/∂Φ at the static bias
  double resonance_sum = 0.0;   // ω_p,0 + ω_p,1
  double resonance_diff = 0.0;  // ω_p,0 - ω_p,1
  bool zero_derivative = false;
  bool dressed_frequencies = false;
  std::vector<std::string> warnings;
};

struct SwtShifts {
  double p0 = 0.0;
  double p1 = 0.0;
  double c = 0.0;
};

struct SqueezingCoefficients {
  double one_photon = 0.0;
  double two_photon = 0.0;  // GHz, coefficient of (b b + b† b†)
};

enum class TransitionCategory { bswap_plasmon, sideband_coupler, coupler_squeezing, cross_driving, other };

std::string to_string(TransitionCategory c);

EffectiveCouplings plasmon_coupler_strengths(const SpectralData& q0, const SpectralData& q1,
                                             double c_n01, const PlasmonModeSelection& sel,
                                             double j_c0, double j_c1, double j_01);

// Fills deltas, sums and g_p in `ec` and returns g_p.
double static_plasmon_coupling(EffectiveCouplings& ec, double omega_p0, double omega_p1,
                               double omega_c);

// dressed: optional dressed plasmon frequencies (ω_p,0, ω_p,1).
ParametricCoupling parametric_strength(
    const CompositeParams& params, const PlasmonModeSelection& sel, double flux_s,
    double drive_amp, const std::optional<std::pair<double, double>>& dressed = std::nullopt);

// Uses the plasmon frequencies stored in `ec`.
SwtShifts swt_dressed_shifts(const EffectiveCouplings& ec, double omega_c);

SqueezingCoefficients squeezing_coefficients(const TransmonParams& c, double flux_s,
                                             double drive_amp);

TransitionCategory classify_transition(const BareLabel& from, const BareLabel& to);

}  // namespace fluxcz

namespace fluxcz {

// Perturbative energies indexed like the bare basis: the coupler is eliminated
// to second order, then coupler-ground levels get second-order corrections
// from the resulting effective fluxonium couplings. Other entries are bare.
// `ratio`, if given, receives per state the smallest |gap|/|coupling| over the
// terms used.
Eigen::VectorXd perturbative_energies(const CompositeOperator& op,
                                      Eigen::VectorXd* ratio = nullptr);

// State-dependent plasmon shifts from perturbative bare-indexed energies.
PlasmonShifts perturbative_shifts(const CompositeOperator& op, double* min_ratio = nullptr);

}  // namespace fluxcz
