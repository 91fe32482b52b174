#include "fluxcz/circuit_spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fluxcz {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegenerateTol = 1e-10;

struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Largest-magnitude component real positive; degenerate clusters ordered by
// the index of that component.
void fix_gauge_and_order(EigenPairs& ep) {
  const int n = static_cast<int>(ep.values.size());
  std::vector<int> peak(n);
  for (int k = 0; k < n; ++k) {
    Eigen::Index imax = 0;
    ep.vectors.col(k).cwiseAbs().maxCoeff(&imax);
    if (ep.vectors(imax, k) < 0.0) ep.vectors.col(k) *= -1.0;
    peak[k] = static_cast<int>(imax);
  }
  int start = 0;
  while (start < n) {
    int stop = start + 1;
    while (stop < n && ep.values[stop] - ep.values[stop - 1] < kDegenerateTol) ++stop;
    if (stop - start > 1) {
      std::vector<int> order(stop - start);
      for (int k = 0; k < stop - start; ++k) order[k] = start + k;
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return peak[a] < peak[b]; });
      Eigen::MatrixXd block(ep.vectors.rows(), stop - start);
      Eigen::VectorXd vals(stop - start);
      for (int k = 0; k < stop - start; ++k) {
        block.col(k) = ep.vectors.col(order[k]);
        vals[k] = ep.values[order[k]];
      }
      ep.vectors.middleCols(start, stop - start) = block;
      ep.values.segment(start, stop - start) = vals;
    }
    start = stop;
  }
}

// cos and sin of θ = √2·φ_zpf·x, x = (a + a†)/√2, via the spectral
// decomposition of x in a padded basis (Gauss-Hermite nodes).
void trig_of_phase(int n, double phi_zpf, Eigen::MatrixXd& c, Eigen::MatrixXd& s) {
  const int m = 2 * n + 60;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(m - 1);
  for (int k = 1; k < m; ++k) sub[k - 1] = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const Eigen::MatrixXd v = es.eigenvectors().topRows(n);
  const Eigen::ArrayXd theta = std::sqrt(2.0) * phi_zpf * es.eigenvalues().array();
  c = v * theta.cos().matrix().asDiagonal() * v.transpose();
  s = v * theta.sin().matrix().asDiagonal() * v.transpose();
}

double phase_zpf(const FluxoniumParams& p) { return std::pow(2.0 * p.e_c / p.e_l, 0.25); }

SpectralData spectral_from_fluxonium(const FluxoniumParams& params, int basis_size, int n_levels) {
  const Eigen::MatrixXd h = fluxonium_hamiltonian(params, basis_size);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  EigenPairs ep{es.eigenvalues(), es.eigenvectors()};
  fix_gauge_and_order(ep);
  const Eigen::MatrixXd vk = ep.vectors.leftCols(n_levels);
  const Eigen::MatrixXd a = vk.transpose() * fluxonium_charge_generator(params, basis_size) * vk;
  SpectralData out;
  out.n_levels = n_levels;
  out.basis_size = basis_size;
  out.energies.resize(n_levels);
  for (int k = 0; k < n_levels; ++k) out.energies[k] = ep.values[k] - ep.values[0];
  out.n_elements = std::complex<double>(0.0, 1.0) * a.cast<std::complex<double>>();
  return out;
}

}  // namespace

void FluxoniumParams::validate() const {
  if (!(e_c > 0.0) || !(e_l > 0.0) || !(e_j >= 0.0) || !std::isfinite(phi_ext))
    throw std::invalid_argument("fluxonium parameters require e_c > 0, e_l > 0, e_j >= 0");
}

double TransmonParams::effective_e_j(double at_flux) const {
  return e_j_max * std::cos(kPi * at_flux);
}

void TransmonParams::validate() const {
  if (!(e_c > 0.0) || !(e_j_max > 0.0))
    throw std::invalid_argument("transmon parameters require e_c > 0, e_j_max > 0");
  if (!(std::abs(flux) < 0.5)) throw DomainError("transmon flux must satisfy |flux| < 0.5");
}

Eigen::MatrixXd fluxonium_hamiltonian(const FluxoniumParams& params, int basis_size) {
  params.validate();
  const double omega = std::sqrt(8.0 * params.e_c * params.e_l);
  Eigen::MatrixXd c, s;
  trig_of_phase(basis_size, phase_zpf(params), c, s);
  // cos(θ + φ_ext) with the oscillator centred at φ_ext
  Eigen::MatrixXd h = -params.e_j * (std::cos(params.phi_ext) * c - std::sin(params.phi_ext) * s);
  for (int k = 0; k < basis_size; ++k) h(k, k) += omega * (k + 0.5);
  return h;
}

Eigen::MatrixXd fluxonium_charge_generator(const FluxoniumParams& params, int basis_size) {
  const double n_zpf = 0.5 / phase_zpf(params);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(basis_size, basis_size);
  for (int k = 0; k + 1 < basis_size; ++k) {
    const double r = n_zpf * std::sqrt(k + 1.0);
    a(k + 1, k) = r;
    a(k, k + 1) = -r;
  }
  return a;
}

SpectralData diagonalize_fluxonium(const FluxoniumParams& params, int basis_size, int n_levels,
                                   double tol, int max_basis_size) {
  params.validate();
  if (n_levels < 1 || basis_size < 4 * n_levels)
    throw std::invalid_argument("diagonalize_fluxonium requires basis_size >= 4*n_levels");
  double delta = 0.0;
  SpectralData current = spectral_from_fluxonium(params, basis_size, n_levels);
  for (int n = basis_size; 2 * n <= max_basis_size; n *= 2) {
    SpectralData doubled = spectral_from_fluxonium(params, 2 * n, n_levels);
    delta = 0.0;
    for (int k = 0; k < n_levels; ++k)
      delta = std::max(delta, std::abs(doubled.energies[k] - current.energies[k]));
    if (delta < tol) return current;
    current = std::move(doubled);
  }
  std::ostringstream msg;
  msg << "fluxonium basis did not converge up to size " << max_basis_size << " (last delta "
      << delta << " GHz)";
  throw ConvergenceError(msg.str(), delta);
}

SpectralData diagonalize_transmon_charge(const TransmonParams& params, int n_charge_cutoff,
                                         int n_levels) {
  if (!(params.e_c > 0.0) || !(params.e_j_max > 0.0))
    throw std::invalid_argument("transmon parameters require e_c > 0, e_j_max > 0");
  if (n_charge_cutoff < 20)
    throw std::invalid_argument("diagonalize_transmon_charge requires n_charge_cutoff >= 20");
  const int dim = 2 * n_charge_cutoff + 1;
  if (n_levels < 1 || n_levels > dim) throw std::invalid_argument("n_levels out of range");

  const double e_j = params.effective_e_j(params.flux);
  Eigen::VectorXd diag(dim), sub = Eigen::VectorXd::Constant(dim - 1, -0.5 * e_j);
  Eigen::VectorXd charge(dim);
  for (int k = 0; k < dim; ++k) {
    charge[k] = k - n_charge_cutoff;
    diag[k] = 4.0 * params.e_c * charge[k] * charge[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  EigenPairs ep{es.eigenvalues(), es.eigenvectors()};
  fix_gauge_and_order(ep);

  for (int k = 0; k < n_levels; ++k) {
    const double edge = ep.vectors(0, k) * ep.vectors(0, k) +
                        ep.vectors(dim - 1, k) * ep.vectors(dim - 1, k);
    if (edge > 1e-8) {
      std::ostringstream msg;
      msg << "charge cutoff " << n_charge_cutoff << " too small: level " << k
          << " has edge population " << edge;
      throw CutoffError(msg.str());
    }
  }
  const Eigen::MatrixXd vk = ep.vectors.leftCols(n_levels);
  SpectralData out;
  out.n_levels = n_levels;
  out.basis_size = dim;
  out.energies.resize(n_levels);
  for (int k = 0; k < n_levels; ++k) out.energies[k] = ep.values[k] - ep.values[0];
  out.n_elements = (vk.transpose() * charge.asDiagonal() * vk).cast<std::complex<double>>();
  return out;
}

OscillatorParams transmon_oscillator_params(const TransmonParams& params, double flux) {
  if (!(params.e_c > 0.0)) throw std::invalid_argument("transmon e_c must be positive");
  const double e_j = params.effective_e_j(flux);
  if (!(e_j > 0.0) || !(std::abs(flux) < 0.5))
    throw DomainError("coupler flux outside the domain with positive effective E_J");
  OscillatorParams out;
  out.omega_c = std::sqrt(8.0 * params.e_c * e_j) - params.e_c;
  out.alpha_c = -params.e_c;
  out.n_zpf = std::pow(e_j / (8.0 * params.e_c), 0.25) / std::sqrt(2.0);
  out.phi_zpf = 0.5 / out.n_zpf;
  return out;
}

double coupler_frequency(const TransmonParams& params, double flux) {
  return transmon_oscillator_params(params, flux).omega_c;
}

double coupler_flux_derivative(const TransmonParams& params, double flux, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("derivative step must be positive");
  if (!(std::abs(flux) + step < 0.5))
    throw DomainError("flux +/- step leaves the coupler domain");
  const double scale = coupler_frequency(params, flux);
  auto central = [&](double h) {
    if (h < 1e-12 || 2.0 * h * scale < 1e-12)
      throw PrecisionError("derivative step too small to resolve frequency differences");
    return (coupler_frequency(params, flux + h) - coupler_frequency(params, flux - h)) / (2.0 * h);
  };
  double h = step;
  double coarse = central(h);
  for (;;) {
    const double fine = central(0.5 * h);
    if (std::abs(fine - coarse) < 1e-6) return coarse;
    h *= 0.5;
    coarse = fine;
  }
}

}  // namespace fluxcz
