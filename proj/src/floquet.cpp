#include "fluxcz/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "fluxcz/errors.hpp"

namespace fluxcz {

namespace {

constexpr double kPi = std::numbers::pi;

double circular_distance(double a, double b, double period) {
  const double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

struct FloquetPoint {
  Eigen::VectorXd eps;
  Eigen::MatrixXcd vectors;  // dressed-frame amplitudes
};

FloquetPoint floquet_point(const CompositeModel& model, const DressedFrame& frame,
                           const FloquetDrive& drive, const PropagatorOptions& options) {
  const Eigen::MatrixXcd m = monodromy(model, drive, 0.0, options);
  const Eigen::MatrixXcd v = frame.spectrum.vectors.cast<cplx>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(v.adjoint() * m * v);
  FloquetPoint p;
  p.vectors = es.eigenvectors();
  p.eps.resize(es.eigenvalues().size());
  for (int i = 0; i < p.eps.size(); ++i) {
    p.eps[i] = fold_quasienergy(-std::arg(es.eigenvalues()[i]) * drive.drive_freq / (2.0 * kPi),
                                drive.drive_freq);
    p.vectors.col(i).normalize();
  }
  return p;
}

// The two Floquet states with the largest weight in span(q). Returns the
// smaller of the two weights.
double pick_pair(const FloquetPoint& p, const Eigen::MatrixXcd& q, int& i1, int& i2) {
  const Eigen::VectorXd w = (q.adjoint() * p.vectors).colwise().squaredNorm().transpose();
  std::vector<int> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + 2, order.end(),
                    [&](int a, int b) { return w[a] > w[b]; });
  i1 = order[0];
  i2 = order[1];
  return w[i2];
}

}  // namespace

void FloquetDrive::validate() const {
  if (drive_amp < 0.0) throw std::invalid_argument("drive amplitude must be non-negative");
  if (!(drive_freq > 0.0)) throw std::invalid_argument("drive frequency must be positive");
}

Eigen::MatrixXcd monodromy(const CompositeModel& model, const FloquetDrive& drive, double t0,
                           const PropagatorOptions& options) {
  drive.validate();
  if (t0 < 0.0) throw std::invalid_argument("time origin must be non-negative");
  const double period = drive.period();
  const FluxSchedule s(
      ParametricPulse{drive.flux_static, drive.drive_amp, drive.drive_freq, 0.0, 0.0, t0 + period});
  check_time_step(model, s, options.dt);
  PropagatorOptions plain = options;
  plain.periodic = false;
  const Eigen::MatrixXcd m = Propagator(model, plain).propagator(s, t0, t0 + period);
  const Eigen::MatrixXcd b = model.basis_change(s.flux(t0), drive.flux_static).cast<cplx>();
  const Eigen::MatrixXcd out = b * m * b.transpose();
  const double drift =
      (out.adjoint() * out - Eigen::MatrixXcd::Identity(out.rows(), out.cols())).cwiseAbs().maxCoeff();
  if (drift > 1e-8) throw IntegrationError("monodromy is not unitary", drift);
  return out;
}

double fold_quasienergy(double e, double freq) {
  if (!(freq > 0.0)) throw std::invalid_argument("folding needs a positive frequency");
  double r = e - freq * std::floor(e / freq + 0.5);
  if (r >= 0.5 * freq) r -= freq;
  if (r < -0.5 * freq) r += freq;
  return r;
}

FloquetSpectrum quasienergies(const CompositeModel& model, const Eigen::MatrixXcd& m,
                              const FloquetDrive& drive, const DressedFrame& frame,
                              double threshold) {
  drive.validate();
  if (std::abs(frame.flux - drive.flux_static) > 1e-12)
    throw std::invalid_argument("dressed frame flux must equal the static bias");
  const int d = model.dimension();
  if (m.rows() != d || m.cols() != d) throw std::invalid_argument("monodromy has wrong dimension");
  const Eigen::MatrixXcd v = frame.spectrum.vectors.cast<cplx>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(v.adjoint() * m * v);

  FloquetSpectrum out;
  out.drive = drive;
  std::vector<double> phase(d);
  for (int i = 0; i < d; ++i) phase[i] = std::arg(es.eigenvalues()[i]);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return phase[a] < phase[b]; });
  for (int k = 0; k < d; ++k) {
    const double next = k + 1 < d ? phase[order[k + 1]] : phase[order[0]] + 2.0 * kPi;
    if (next - phase[order[k]] < 1e-9) out.degenerate = true;
  }

  out.quasienergies.resize(d);
  out.vectors.resize(d, d);
  for (int i = 0; i < d; ++i) {
    out.quasienergies[i] = fold_quasienergy(-phase[i] * drive.drive_freq / (2.0 * kPi), drive.drive_freq);
    out.vectors.col(i) = es.eigenvectors().col(i).normalized();
  }

  // Greedy one-to-one matching by descending overlap.
  const Eigen::MatrixXd w = out.vectors.cwiseAbs2();
  std::vector<std::tuple<double, int, int>> cand;
  cand.reserve(static_cast<std::size_t>(d) * d);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i) cand.emplace_back(w(k, i), k, i);
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::make_pair(std::get<1>(a), std::get<2>(a)) < std::make_pair(std::get<1>(b), std::get<2>(b));
  });
  std::vector<int> state_of(d, -1);
  std::vector<bool> used(d, false);
  out.labels.resize(d);
  out.overlaps.assign(d, 0.0);
  out.ambiguous.assign(d, false);
  int assigned = 0;
  for (const auto& [ov, k, i] : cand) {
    if (state_of[i] >= 0 || used[k]) continue;
    state_of[i] = k;
    used[k] = true;
    out.labels[i] = frame.spectrum.labels[k];
    out.overlaps[i] = std::sqrt(ov);
    out.ambiguous[i] = ov < threshold;
    if (++assigned == d) break;
  }
  return out;
}

TransitionScan extract_transition(const CompositeModel& model, double flux_static,
                                  double drive_amp, const std::pair<BareLabel, BareLabel>& pair,
                                  const std::pair<double, double>& window, double resolution,
                                  const PropagatorOptions& options, int workers) {
  const auto [lo, hi] = window;
  if (!(hi > lo) || !(resolution > 0.0)) throw std::invalid_argument("invalid frequency window");
  if (workers < 1) throw std::invalid_argument("worker count must be at least 1");
  if (pair.first == pair.second) throw std::invalid_argument("transition needs two distinct labels");
  const int n = static_cast<int>(std::floor((hi - lo) / resolution + 1e-9)) + 1;
  if (n < 3) throw std::invalid_argument("frequency window needs at least three points");

  const DressedFrame frame = dressed_frame(model, flux_static);
  for (const BareLabel& l : {pair.first, pair.second})
    if (frame.spectrum.is_ambiguous(l))
      throw LabelingError("label " + l.str() + " is ambiguous at the static bias");
  auto drive_at = [&](double f) { return FloquetDrive{flux_static, drive_amp, f}; };

  TransitionScan out;
  out.freqs.resize(n);
  for (int k = 0; k < n; ++k) out.freqs[k] = lo + k * resolution;
  std::vector<FloquetPoint> points(n);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int k = 0; k < n; ++k) points[k] = floquet_point(model, frame, drive_at(out.freqs[k]), options);

  // Start from the Floquet states closest to the two dressed states, then
  // follow their span.
  const int d = model.dimension();
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(d, 2);
  q(frame.spectrum.dressed_index(pair.first), 0) = 1.0;
  q(frame.spectrum.dressed_index(pair.second), 1) = 1.0;
  std::vector<Eigen::MatrixXcd> spans(n);
  for (int k = 0; k < n; ++k) {
    int i1 = 0, i2 = 0;
    const double w = pick_pair(points[k], q, i1, i2);
    if (w < 0.5) {
      out.freqs.resize(k);
      out.message = "lost track of the pair near " + std::to_string(out.freqs.empty() ? lo : out.freqs.back()) + " GHz";
      return out;
    }
    q.col(0) = points[k].vectors.col(i1);
    q.col(1) = points[k].vectors.col(i2);
    spans[k] = q;
    out.gaps.push_back(circular_distance(points[k].eps[i1], points[k].eps[i2], out.freqs[k]));
  }

  const int kmin = static_cast<int>(std::min_element(out.gaps.begin(), out.gaps.end()) - out.gaps.begin());
  if (kmin == 0 || kmin == n - 1) {
    out.message = "no gap minimum inside the window";
    return out;
  }

  // A two-level avoided crossing has gap² quadratic in the drive frequency:
  // fit a parabola to gap² and re-evaluate at its vertex.
  std::vector<std::pair<double, double>> samples;
  for (int k = kmin - 1; k <= kmin + 1; ++k) samples.emplace_back(out.freqs[k], out.gaps[k]);
  const Eigen::MatrixXcd& span = spans[kmin];
  auto gap_at = [&](double f) {
    const FloquetPoint p = floquet_point(model, frame, drive_at(f), options);
    int i1 = 0, i2 = 0;
    pick_pair(p, span, i1, i2);
    return circular_distance(p.eps[i1], p.eps[i2], f);
  };
  double best_f = out.freqs[kmin], best_gap = out.gaps[kmin];
  for (int iter = 0; iter < 4; ++iter) {
    std::sort(samples.begin(), samples.end(),
              [&](const auto& a, const auto& b) { return std::abs(a.first - best_f) < std::abs(b.first - best_f); });
    samples.resize(3);
    Eigen::Matrix3d a;
    Eigen::Vector3d y;
    for (int r = 0; r < 3; ++r) {
      const double x = samples[r].first - best_f;
      a.row(r) << x * x, x, 1.0;
      y[r] = samples[r].second * samples[r].second;
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
    if (!(c[0] > 0.0)) break;
    const double f = std::clamp(best_f - 0.5 * c[1] / c[0], out.freqs[kmin - 1], out.freqs[kmin + 1]);
    const double g = gap_at(f);
    samples.emplace_back(f, g);
    const double shift = std::abs(f - best_f);
    if (g < best_gap) {
      best_gap = g;
      best_f = f;
    }
    if (shift < 1e-6) break;
  }
  out.found = true;
  out.freq = best_f;
  out.strength = 0.5 * best_gap;
  return out;
}

}  // namespace fluxcz
