#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "fluxcz/errors.hpp"

namespace fluxcz {

// All energies are frequencies in GHz (E/2π).
struct FluxoniumParams {
  double e_c = 0.0;
  double e_l = 0.0;
  double e_j = 0.0;
  double phi_ext = 0.0;  // radians

  void validate() const;
};

struct TransmonParams {
  double e_c = 0.0;
  double e_j_max = 0.0;
  double flux = 0.0;  // in units of the flux quantum

  // E_J(Φ) = E_J,max cos(πΦ)
  double effective_e_j(double at_flux) const;
  void validate() const;
};

struct SpectralData {
  std::vector<double> energies;  // ascending, ground state at 0
  Eigen::MatrixXcd n_elements;   // <i|n|j> in the eigenbasis
  int n_levels = 0;
  int basis_size = 0;

  double transition(int i, int j) const { return energies[j] - energies[i]; }
  double charge_element(int i, int j) const { return std::abs(n_elements(i, j)); }
};

struct OscillatorParams {
  double omega_c = 0.0;
  double alpha_c = 0.0;
  double n_zpf = 0.0;
  double phi_zpf = 0.0;
};

// Dense fluxonium Hamiltonian in the oscillator basis of the linearized
// (E_C, E_L) circuit. Exposed for residual checks.
Eigen::MatrixXd fluxonium_hamiltonian(const FluxoniumParams& params, int basis_size);

// Charge operator in the same basis, as the real antisymmetric A with n = iA.
Eigen::MatrixXd fluxonium_charge_generator(const FluxoniumParams& params, int basis_size);

// Diagonalizes at basis_size and verifies against 2*basis_size, growing the
// basis until the lowest n_levels move by < tol between doublings.
SpectralData diagonalize_fluxonium(const FluxoniumParams& params, int basis_size = 120,
                                   int n_levels = 5, double tol = 1e-6,
                                   int max_basis_size = 2048);

SpectralData diagonalize_transmon_charge(const TransmonParams& params, int n_charge_cutoff = 30,
                                         int n_levels = 4);

OscillatorParams transmon_oscillator_params(const TransmonParams& params, double flux);

// Closed-form ω_c(Φ) of the oscillator approximation.
double coupler_frequency(const TransmonParams& params, double flux);

double coupler_flux_derivative(const TransmonParams& params, double flux, double step = 1e-5);

}  // namespace fluxcz
