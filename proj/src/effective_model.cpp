#include "fluxcz/effective_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fluxcz {

void PlasmonModeSelection::validate(int n_levels) const {
  auto ok = [n_levels](const std::pair<int, int>& p) {
    return p.first >= 0 && p.first < p.second && p.second < n_levels;
  };
  if (!ok(q0_pair) || !ok(q1_pair))
    throw std::invalid_argument("plasmon mode selection needs j < l and r < t within truncation");
}

std::string to_string(TransitionCategory c) {
  switch (c) {
    case TransitionCategory::bswap_plasmon: return "bSWAP-plasmon";
    case TransitionCategory::sideband_coupler: return "sideband-coupler";
    case TransitionCategory::coupler_squeezing: return "coupler-squeezing";
    case TransitionCategory::cross_driving: return "cross-driving";
    case TransitionCategory::other: return "other";
  }
  return "other";
}

EffectiveCouplings plasmon_coupler_strengths(const SpectralData& q0, const SpectralData& q1,
                                             double c_n01, const PlasmonModeSelection& sel,
                                             double j_c0, double j_c1, double j_01) {
  sel.validate(std::min(q0.n_levels, q1.n_levels));
  const auto [j, l] = sel.q0_pair;
  const auto [r, t] = sel.q1_pair;
  const double n0 = q0.charge_element(j, l);
  const double n1 = q1.charge_element(r, t);
  EffectiveCouplings ec;
  ec.g_pc0 = std::abs(j_c0 * n0 * c_n01);
  ec.g_pc1 = std::abs(j_c1 * n1 * c_n01);
  ec.g_p01 = std::abs(j_01 * n0 * n1);
  ec.omega_p = {q0.transition(j, l), q1.transition(r, t)};
  if (n0 < 1e-12) ec.warnings.push_back("forbidden Q0 transition: zero charge matrix element");
  if (n1 < 1e-12) ec.warnings.push_back("forbidden Q1 transition: zero charge matrix element");
  if (std::abs(c_n01) < 1e-12) ec.warnings.push_back("zero coupler charge matrix element");
  return ec;
}

double static_plasmon_coupling(EffectiveCouplings& ec, double omega_p0, double omega_p1,
                               double omega_c) {
  ec.omega_p = {omega_p0, omega_p1};
  const std::array<double, 2> g = {ec.g_pc0, ec.g_pc1};
  double bracket = 0.0;
  for (int k = 0; k < 2; ++k) {
    ec.deltas[k] = ec.omega_p[k] - omega_c;
    ec.sums[k] = ec.omega_p[k] + omega_c;
    if (ec.deltas[k] == 0.0 || ec.sums[k] == 0.0)
      throw std::domain_error("static plasmon coupling undefined at exact resonance");
    if (std::abs(ec.deltas[k]) < 10.0 * g[k]) {
      std::ostringstream msg;
      msg << "mode " << k << " outside the dispersive regime: |delta| = " << std::abs(ec.deltas[k])
          << " GHz < 10 g = " << 10.0 * g[k] << " GHz";
      ec.warnings.push_back(msg.str());
    }
    bracket += 1.0 / ec.deltas[k] - 1.0 / ec.sums[k];
  }
  ec.g_p = ec.g_p01 + 0.5 * ec.g_pc0 * ec.g_pc1 * bracket;
  return ec.g_p;
}

ParametricCoupling parametric_strength(const CompositeParams& params,
                                       const PlasmonModeSelection& sel, double flux_s,
                                       double drive_amp,
                                       const std::optional<std::pair<double, double>>& dressed) {
  params.validate();
  if (drive_amp < 0.0) throw std::invalid_argument("drive amplitude must be non-negative");
  const int nf = params.n_flux_levels;
  const SpectralData q0 = diagonalize_fluxonium(params.q0, params.fluxonium_basis, nf);
  const SpectralData q1 = diagonalize_fluxonium(params.q1, params.fluxonium_basis, nf);
  TransmonParams c = params.coupler;
  c.flux = flux_s;
  const SpectralData cs = diagonalize_transmon_charge(c, 30, 2);

  EffectiveCouplings ec = plasmon_coupler_strengths(q0, q1, cs.charge_element(0, 1), sel,
                                                    params.j_c0, params.j_c1, params.j_01);
  ParametricCoupling out;
  out.drive_amp = drive_amp;
  out.warnings = ec.warnings;
  double w0 = ec.omega_p[0], w1 = ec.omega_p[1];
  if (dressed) {
    w0 = dressed->first;
    w1 = dressed->second;
    out.dressed_frequencies = true;
  }
  const double wc = cs.transition(0, 1);
  static_plasmon_coupling(ec, w0, w1, wc);
  out.warnings.insert(out.warnings.end(), ec.warnings.begin() + out.warnings.size(),
                      ec.warnings.end());
  out.resonance_sum = w0 + w1;
  out.resonance_diff = w0 - w1;
  out.derivative = coupler_flux_derivative(params.coupler, flux_s);
  if (drive_amp > 0.1) out.warnings.push_back("drive amplitude above 0.1: first order suspect");
  if (std::abs(out.derivative) < 1e-9) {
    out.zero_derivative = true;
    out.warnings.push_back("coupler frequency is stationary at this bias: no first-order drive");
    out.g_eff = 0.0;
    return out;
  }
  double bracket = 0.0;
  for (int k = 0; k < 2; ++k)
    bracket += 1.0 / (ec.deltas[k] * ec.deltas[k]) + 1.0 / (ec.sums[k] * ec.sums[k]);
  out.g_eff = drive_amp * 0.25 * ec.g_pc0 * ec.g_pc1 * out.derivative * bracket;
  return out;
}

SwtShifts swt_dressed_shifts(const EffectiveCouplings& ec, double omega_c) {
  SwtShifts s;
  const double d0 = ec.omega_p[0] - omega_c;
  const double d1 = ec.omega_p[1] - omega_c;
  if (ec.g_pc0 != 0.0) s.p0 = ec.g_pc0 * ec.g_pc0 / d0;
  if (ec.g_pc1 != 0.0) s.p1 = ec.g_pc1 * ec.g_pc1 / d1;
  s.c = -(s.p0 + s.p1);
  return s;
}

SqueezingCoefficients squeezing_coefficients(const TransmonParams& c, double flux_s,
                                             double drive_amp) {
  constexpr double kPi = std::numbers::pi;
  const OscillatorParams osc = transmon_oscillator_params(c, flux_s);
  // -E_J sin(φ_s/2)·(φ_d/4)·φ² with φ_d = 2π·δ_Φ, and φ² ⊃ φ_zpf²(b b + b† b†).
  SqueezingCoefficients s;
  s.two_photon = -c.e_j_max * std::sin(kPi * flux_s) * (2.0 * kPi * drive_amp / 4.0) *
                 osc.phi_zpf * osc.phi_zpf;
  return s;
}

TransitionCategory classify_transition(const BareLabel& from, const BareLabel& to) {
  BareLabel a = from, b = to;
  // Classify de-excitations as the reverse excitation.
  if (b.q0 <= a.q0 && b.q1 <= a.q1 && b.c <= a.c) std::swap(a, b);
  const int d0 = b.q0 - a.q0, d1 = b.q1 - a.q1, dc = b.c - a.c;
  if (d0 > 0 && d1 > 0 && dc == 0) return TransitionCategory::bswap_plasmon;
  const bool single_flux = (d0 != 0) != (d1 != 0);
  if (single_flux && (d0 > 0 || d1 > 0) && dc > 0) return TransitionCategory::sideband_coupler;
  if (d0 == 0 && d1 == 0 && std::abs(dc) == 2) return TransitionCategory::coupler_squeezing;
  if (single_flux && dc == 0) {
    const int lo = d0 != 0 ? std::min(a.q0, b.q0) : std::min(a.q1, b.q1);
    const int hi = d0 != 0 ? std::max(a.q0, b.q0) : std::max(a.q1, b.q1);
    // Anything but the low-frequency qubit transition |0>-|1>.
    if (!(lo == 0 && hi == 1)) return TransitionCategory::cross_driving;
  }
  return TransitionCategory::other;
}

}  // namespace fluxcz

namespace fluxcz {

Eigen::VectorXd perturbative_energies(const CompositeOperator& op, Eigen::VectorXd* ratio) {
  const Eigen::MatrixXd& h = op.matrix;
  const int n = static_cast<int>(h.rows());
  const int nf = op.n_flux, nc = op.n_coupler;
  std::vector<int> low, high;
  for (int i = 0; i < n; ++i) ((i / nf) % nc == 0 ? low : high).push_back(i);
  // Second-order elimination of coupler-excited states, then second-order
  // energies inside the coupler-ground block.
  const int p = static_cast<int>(low.size());
  Eigen::MatrixXd heff(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      const int ia = low[a], ib = low[b];
      double v = h(ia, ib);
      for (int m : high) {
        if (h(ia, m) == 0.0 || h(m, ib) == 0.0) continue;
        v += 0.5 * h(ia, m) * h(m, ib) * (1.0 / (h(ia, ia) - h(m, m)) + 1.0 / (h(ib, ib) - h(m, m)));
      }
      heff(a, b) = v;
    }
  Eigen::VectorXd e = h.diagonal();
  if (ratio) *ratio = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int a = 0; a < p; ++a) {
    if (ratio) {
      double& r = (*ratio)[low[a]];
      for (int m : high)
        if (h(low[a], m) != 0.0)
          r = std::min(r, std::abs(h(low[a], low[a]) - h(m, m)) / std::abs(h(low[a], m)));
      for (int b = 0; b < p; ++b)
        if (b != a && heff(a, b) != 0.0)
          r = std::min(r, std::abs(heff(a, a) - heff(b, b)) / std::abs(heff(a, b)));
    }
    double v = heff(a, a);
    for (int b = 0; b < p; ++b) {
      const double gap = heff(a, a) - heff(b, b);
      if (b == a || std::abs(gap) < 1e-12) continue;
      v += heff(a, b) * heff(a, b) / gap;
    }
    e[low[a]] = v;
  }
  return e;
}

PlasmonShifts perturbative_shifts(const CompositeOperator& op, double* min_ratio) {
  Eigen::VectorXd ratio;
  const Eigen::VectorXd e = perturbative_energies(op, &ratio);
  auto at = [&](int k, int l) { return e[(k * op.n_coupler) * op.n_flux + l]; };
  PlasmonShifts s;
  s.q0 = std::abs((at(2, 1) - at(1, 1)) - (at(2, 0) - at(1, 0)));
  s.q1 = std::abs((at(1, 2) - at(1, 1)) - (at(0, 2) - at(0, 1)));
  if (min_ratio) {
    *min_ratio = std::numeric_limits<double>::infinity();
    for (auto [k, l] : {std::pair{1, 0}, {1, 1}, {2, 0}, {2, 1}, {0, 1}, {0, 2}, {1, 2}})
      *min_ratio = std::min(*min_ratio, ratio[(k * op.n_coupler) * op.n_flux + l]);
  }
  return s;
}

}  // namespace fluxcz
