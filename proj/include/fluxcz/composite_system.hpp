#pragma once

#include <Eigen/Dense>
#include <compare>
#include <string>
#include <utility>
#include <vector>

#include "fluxcz/circuit_spectra.hpp"
#include "fluxcz/kernels.hpp"

namespace fluxcz {

struct CompositeParams {
  FluxoniumParams q0;
  FluxoniumParams q1;
  TransmonParams coupler;
  double j_c0 = 0.0;
  double j_c1 = 0.0;
  double j_01 = 0.0;
  int n_flux_levels = 5;
  int n_coupler_levels = 6;
  int fluxonium_basis = 120;

  void validate() const;
};

// Bare product label |q0, c, q1>.
struct BareLabel {
  int q0 = 0;
  int c = 0;
  int q1 = 0;

  auto operator<=>(const BareLabel&) const = default;
  std::string str() const;                    // "|101>"
  static BareLabel parse(const std::string& s);  // accepts "101", "|101>", "1,0,1"
};

struct CompositeOperator {
  Eigen::MatrixXd matrix;  // real symmetric in the chosen gauge
  double flux_c = 0.0;
  int n_flux = 0;
  int n_coupler = 0;
};

struct LabeledSpectrum {
  Eigen::VectorXd energies;  // ascending, GHz
  Eigen::MatrixXd vectors;   // columns are dressed states in the bare basis
  std::vector<BareLabel> labels;
  std::vector<double> overlaps;  // |<bare|dressed>| of the assigned label
  std::vector<bool> ambiguous;
  std::vector<int> dressed_of_bare;
  int n_flux = 0;
  int n_coupler = 0;

  int bare_index(const BareLabel& l) const { return (l.q0 * n_coupler + l.c) * n_flux + l.q1; }
  int dressed_index(const BareLabel& l) const { return dressed_of_bare.at(bare_index(l)); }
  double energy(const BareLabel& l) const { return energies[dressed_index(l)]; }
  bool is_ambiguous(const BareLabel& l) const { return ambiguous[dressed_index(l)]; }
};

// Caches the single-circuit spectra and the sparse Hamiltonian pieces so the
// coupler flux can be changed cheaply.
class CompositeModel {
 public:
  explicit CompositeModel(const CompositeParams& params);

  const CompositeParams& params() const { return params_; }
  int n_flux() const { return params_.n_flux_levels; }
  int n_coupler() const { return params_.n_coupler_levels; }
  int dimension() const { return n_flux() * n_coupler() * n_flux(); }
  int index(const BareLabel& l) const { return (l.q0 * n_coupler() + l.c) * n_flux() + l.q1; }
  BareLabel label_of(int i) const;

  const SpectralData& q0_spectrum() const { return q0_; }
  const SpectralData& q1_spectrum() const { return q1_; }
  const HamiltonianParts& parts() const { return parts_; }

  OscillatorParams coupler(double flux) const;

  // Weights of the instantaneous Hamiltonian at flux Φ moving at rate dΦ/dt
  // (1/ns). The rate enters through the frame term of the flux-dependent
  // oscillator basis.
  TermWeights weights(double flux, double flux_rate = 0.0) const;

  CompositeOperator hamiltonian(double flux) const;

  // Orthogonal map taking coefficients in the oscillator basis at from_flux to
  // coefficients in the basis at to_flux.
  Eigen::MatrixXd basis_change(double from_flux, double to_flux) const;

 private:
  CompositeParams params_;
  SpectralData q0_, q1_;
  HamiltonianParts parts_;
  Eigen::MatrixXd squeeze_generator_;  // (b†² - b²)/2 on the coupler factor
};

CompositeOperator build_hamiltonian(const CompositeParams& params, double flux_c);

LabeledSpectrum label_eigenstates(const CompositeOperator& op, double threshold = 0.5);

struct PlasmonShifts {
  double q0 = 0.0;
  double q1 = 0.0;
};

PlasmonShifts state_dependent_shifts(const LabeledSpectrum& levels);
double zz_coupling(const LabeledSpectrum& levels);

double find_idle_point(const CompositeModel& model, double flux_min, double flux_max,
                       double resolution);
double find_idle_point(const CompositeParams& params, double flux_min, double flux_max,
                       double resolution);

}  // namespace fluxcz
