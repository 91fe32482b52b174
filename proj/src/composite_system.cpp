#include "fluxcz/composite_system.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace fluxcz {

namespace {

Eigen::MatrixXd kron3(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
  Eigen::MatrixXd ab = Eigen::kroneckerProduct(a, b);
  return Eigen::kroneckerProduct(ab, c);
}

// Imaginary part of a purely imaginary charge matrix, truncated to n levels.
// Entries at round-off level are cleared so selection rules hold exactly.
Eigen::MatrixXd charge_generator(const SpectralData& s, int n) {
  Eigen::MatrixXd a = s.n_elements.topLeftCorner(n, n).imag();
  const double cut = 1e-12 * a.cwiseAbs().maxCoeff();
  return a.unaryExpr([cut](double v) { return std::abs(v) < cut ? 0.0 : v; });
}

// ln φ_zpf(Φ) up to a constant.
double log_phase_zpf(const TransmonParams& c, double flux) {
  return -0.25 * std::log(c.effective_e_j(flux));
}

}  // namespace

void CompositeParams::validate() const {
  q0.validate();
  q1.validate();
  if (!(coupler.e_c > 0.0) || !(coupler.e_j_max > 0.0))
    throw std::invalid_argument("coupler requires e_c > 0 and e_j_max > 0");
  if (n_flux_levels < 5) throw std::invalid_argument("n_flux_levels must be >= 5");
  if (n_coupler_levels < 4) throw std::invalid_argument("n_coupler_levels must be >= 4");
  if (fluxonium_basis < 4 * n_flux_levels)
    throw std::invalid_argument("fluxonium_basis must be >= 4*n_flux_levels");
  for (double j : {j_c0, j_c1, j_01})
    if (!std::isfinite(j)) throw std::invalid_argument("coupling energies must be finite");
}

std::string BareLabel::str() const {
  std::ostringstream s;
  if (q0 < 10 && c < 10 && q1 < 10)
    s << '|' << q0 << c << q1 << '>';
  else
    s << '|' << q0 << ',' << c << ',' << q1 << '>';
  return s.str();
}

BareLabel BareLabel::parse(const std::string& text) {
  std::string t;
  for (char ch : text)
    if (ch != '|' && ch != '>' && !std::isspace(static_cast<unsigned char>(ch))) t += ch;
  BareLabel out;
  if (t.find(',') != std::string::npos) {
    char c1 = 0, c2 = 0;
    std::istringstream in(t);
    if (!(in >> out.q0 >> c1 >> out.c >> c2 >> out.q1) || c1 != ',' || c2 != ',')
      throw std::invalid_argument("cannot parse state label '" + text + "'");
    return out;
  }
  if (t.size() != 3 || !std::all_of(t.begin(), t.end(), [](char ch) { return std::isdigit(ch); }))
    throw std::invalid_argument("cannot parse state label '" + text + "'");
  return {t[0] - '0', t[1] - '0', t[2] - '0'};
}

CompositeModel::CompositeModel(const CompositeParams& params) : params_(params) {
  params_.validate();
  const int nf = params_.n_flux_levels;
  const int nc = params_.n_coupler_levels;
  q0_ = diagonalize_fluxonium(params_.q0, params_.fluxonium_basis, nf);
  q1_ = diagonalize_fluxonium(params_.q1, params_.fluxonium_basis, nf);
  if (q0_.n_levels != nf || q1_.n_levels != nf)
    throw ConstructionError("fluxonium spectra do not match the requested truncation");

  const Eigen::MatrixXd a0 = charge_generator(q0_, nf);
  const Eigen::MatrixXd a1 = charge_generator(q1_, nf);
  const Eigen::MatrixXd idf = Eigen::MatrixXd::Identity(nf, nf);
  const Eigen::MatrixXd idc = Eigen::MatrixXd::Identity(nc, nc);

  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(nc, nc);  // b
  for (int k = 1; k < nc; ++k) lower(k - 1, k) = std::sqrt(static_cast<double>(k));
  const Eigen::MatrixXd raise = lower.transpose();
  const Eigen::MatrixXd number = raise * lower;
  const Eigen::MatrixXd bm = raise - lower;  // n_c = i·n_zpf·(b† - b)
  Eigen::MatrixXd kerr = Eigen::MatrixXd::Zero(nc, nc);
  for (int k = 0; k < nc; ++k) kerr(k, k) = 0.5 * k * (k - 1.0);
  squeeze_generator_ = 0.5 * (raise * raise - lower * lower);

  Eigen::MatrixXd e0 = Eigen::MatrixXd::Zero(nf, nf), e1 = e0;
  for (int k = 0; k < nf; ++k) {
    e0(k, k) = q0_.energies[k];
    e1(k, k) = q1_.energies[k];
  }

  // With n_k = i·A_k the products of two charge operators are real.
  const Eigen::MatrixXd fixed_diag =
      kron3(e0, idc, idf) + kron3(idf, idc, e1) - params_.coupler.e_c * kron3(idf, kerr, idf);
  const Eigen::MatrixXd fixed_off = -params_.j_01 * kron3(a0, idc, a1);
  const Eigen::MatrixXd charge =
      -(params_.j_c0 * kron3(a0, bm, idf) + params_.j_c1 * kron3(idf, bm, a1));
  const Eigen::MatrixXd frame = kron3(idf, 2.0 * squeeze_generator_, idf);

  const int dim = dimension();
  if (fixed_off.rows() != dim || charge.rows() != dim)
    throw ConstructionError("operator dimensions do not match the product space");
  parts_.diag_fixed = fixed_diag.diagonal();
  parts_.diag_number = kron3(idf, number, idf).diagonal();
  parts_.fixed = CsrMatrix::from_dense(fixed_off, 1e-14 * std::max(1.0, std::abs(params_.j_01)));
  parts_.charge = CsrMatrix::from_dense(charge, 1e-14);
  parts_.frame = CsrMatrix::from_dense(frame);
  parts_.finalize();
}

BareLabel CompositeModel::label_of(int i) const {
  const int nf = n_flux(), nc = n_coupler();
  return {i / (nc * nf), (i / nf) % nc, i % nf};
}

OscillatorParams CompositeModel::coupler(double flux) const {
  return transmon_oscillator_params(params_.coupler, flux);
}

TermWeights CompositeModel::weights(double flux, double flux_rate) const {
  const OscillatorParams osc = coupler(flux);
  TermWeights w;
  w.fixed = 1.0;
  w.number = osc.omega_c;
  w.charge = osc.n_zpf;
  // d ln φ_zpf/dt = (π/4)·tan(πΦ)·dΦ/dt; frame term -i(ṡ/2)(b†² - b²) in
  // angular units, divided by 2π for GHz.
  const double sdot = 0.25 * std::numbers::pi * std::tan(std::numbers::pi * flux) * flux_rate;
  w.frame = -sdot / (4.0 * std::numbers::pi);
  return w;
}

CompositeOperator CompositeModel::hamiltonian(double flux) const {
  const TermWeights w = weights(flux);
  CompositeOperator op;
  op.flux_c = flux;
  op.n_flux = n_flux();
  op.n_coupler = n_coupler();
  op.matrix = w.charge * parts_.charge.to_dense() + w.fixed * parts_.fixed.to_dense();
  op.matrix.diagonal() += w.fixed * parts_.diag_fixed + w.number * parts_.diag_number;
  return op;
}

Eigen::MatrixXd CompositeModel::basis_change(double from_flux, double to_flux) const {
  const int nf = n_flux();
  const double ds =
      log_phase_zpf(params_.coupler, to_flux) - log_phase_zpf(params_.coupler, from_flux);
  const Eigen::MatrixXd g = (-ds * squeeze_generator_).exp();
  const Eigen::MatrixXd idf = Eigen::MatrixXd::Identity(nf, nf);
  return kron3(idf, g, idf);
}

CompositeOperator build_hamiltonian(const CompositeParams& params, double flux_c) {
  return CompositeModel(params).hamiltonian(flux_c);
}

LabeledSpectrum label_eigenstates(const CompositeOperator& op, double threshold) {
  const int dim = static_cast<int>(op.matrix.rows());
  if (op.matrix.cols() != dim || dim != op.n_flux * op.n_coupler * op.n_flux)
    throw ConstructionError("composite operator has inconsistent dimensions");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix);
  LabeledSpectrum out;
  out.n_flux = op.n_flux;
  out.n_coupler = op.n_coupler;
  out.energies = es.eigenvalues();
  out.vectors = es.eigenvectors();

  std::vector<std::pair<double, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(dim) * dim);
  for (int d = 0; d < dim; ++d)
    for (int b = 0; b < dim; ++b) pairs.emplace_back(std::abs(out.vectors(b, d)), d * dim + b);
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });

  std::vector<int> bare_of(dim, -1);
  out.dressed_of_bare.assign(dim, -1);
  int assigned = 0;
  for (const auto& [ov, key] : pairs) {
    const int d = key / dim, b = key % dim;
    if (bare_of[d] >= 0 || out.dressed_of_bare[b] >= 0) continue;
    bare_of[d] = b;
    out.dressed_of_bare[b] = d;
    if (++assigned == dim) break;
  }
  out.labels.resize(dim);
  out.overlaps.resize(dim);
  out.ambiguous.resize(dim);
  const int nf = op.n_flux, nc = op.n_coupler;
  for (int d = 0; d < dim; ++d) {
    const int b = bare_of[d];
    out.labels[d] = {b / (nc * nf), (b / nf) % nc, b % nf};
    out.overlaps[d] = std::abs(out.vectors(b, d));
    out.ambiguous[d] = out.overlaps[d] * out.overlaps[d] < threshold;
    // Sign convention: assigned bare component positive.
    if (out.vectors(b, d) < 0.0) out.vectors.col(d) *= -1.0;
  }
  return out;
}

namespace {

void require_unambiguous(const LabeledSpectrum& levels, std::initializer_list<BareLabel> labels) {
  std::string flagged;
  for (const auto& l : labels) {
    if (l.q0 >= levels.n_flux || l.q1 >= levels.n_flux || l.c >= levels.n_coupler)
      throw LabelingError("label " + l.str() + " outside the truncation");
    if (levels.is_ambiguous(l)) flagged += (flagged.empty() ? "" : ", ") + l.str();
  }
  if (!flagged.empty()) throw LabelingError("ambiguous dressed states: " + flagged);
}

}  // namespace

PlasmonShifts state_dependent_shifts(const LabeledSpectrum& levels) {
  auto e = [&](int k, int l) { return levels.energy({k, 0, l}); };
  require_unambiguous(levels, {{1, 0, 0}, {1, 0, 1}, {2, 0, 0}, {2, 0, 1}, {0, 0, 1}, {0, 0, 2},
                             {1, 0, 2}});
  PlasmonShifts s;
  s.q0 = std::abs((e(2, 1) - e(1, 1)) - (e(2, 0) - e(1, 0)));
  s.q1 = std::abs((e(1, 2) - e(1, 1)) - (e(0, 2) - e(0, 1)));
  return s;
}

double zz_coupling(const LabeledSpectrum& levels) {
  require_unambiguous(levels, {{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 0, 1}});
  return levels.energy({1, 0, 1}) - levels.energy({1, 0, 0}) - levels.energy({0, 0, 1}) +
         levels.energy({0, 0, 0});
}

double find_idle_point(const CompositeModel& model, double flux_min, double flux_max,
                       double resolution) {
  if (!(flux_min < flux_max) || !(resolution > 0.0))
    throw std::invalid_argument("idle search needs flux_min < flux_max and resolution > 0");
  if (!(std::abs(flux_min) < 0.5) || !(std::abs(flux_max) < 0.5))
    throw DomainError("idle search range leaves the coupler domain");

  auto objective = [&](double f, bool& ok) {
    try {
      const PlasmonShifts s = state_dependent_shifts(label_eigenstates(model.hamiltonian(f)));
      ok = true;
      return std::max(s.q0, s.q1);
    } catch (const LabelingError&) {
      ok = false;
      return std::numeric_limits<double>::infinity();
    }
  };

  const int n = std::max(1, static_cast<int>(std::round((flux_max - flux_min) / resolution)));
  double best = std::numeric_limits<double>::infinity();
  double best_f = flux_min;
  bool any = false;
  for (int i = 0; i <= n; ++i) {
    const double f = flux_min + (flux_max - flux_min) * i / n;
    bool ok = false;
    const double v = objective(f, ok);
    if (ok && v < best) {
      best = v;
      best_f = f;
    }
    any = any || ok;
  }
  if (!any) throw SearchError("idle search failed: every grid point has ambiguous labels");

  const double step = (flux_max - flux_min) / n;
  double a = std::max(flux_min, best_f - step), b = std::min(flux_max, best_f + step);
  const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  bool okc = false, okd = false;
  double fc = objective(c, okc), fd = objective(d, okd);
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = objective(c, okc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = objective(d, okd);
    }
  }
  const double mid = 0.5 * (a + b);
  bool okm = false;
  const double fm = objective(mid, okm);
  return (okm && fm <= best) ? mid : best_f;
}

double find_idle_point(const CompositeParams& params, double flux_min, double flux_max,
                       double resolution) {
  return find_idle_point(CompositeModel(params), flux_min, flux_max, resolution);
}

}  // namespace fluxcz
