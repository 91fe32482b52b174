#include "fluxcz/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fluxcz {

CsrMatrix CsrMatrix::from_dense(const Eigen::MatrixXd& m, double drop) {
  CsrMatrix out;
  out.n = static_cast<int>(m.rows());
  out.row_ptr.assign(out.n + 1, 0);
  for (int r = 0; r < out.n; ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (std::abs(m(r, c)) > drop) {
        out.col.push_back(c);
        out.val.push_back(m(r, c));
      }
    }
    out.row_ptr[r + 1] = static_cast<int>(out.val.size());
  }
  return out;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < n; ++r)
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) m(r, col[k]) = val[k];
  return m;
}

Eigen::VectorXd CsrMatrix::row_abs_sums() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < n; ++r)
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s[r] += std::abs(val[k]);
  return s;
}

void HamiltonianParts::finalize() {
  abs_fixed = fixed.row_abs_sums();
  abs_charge = charge.row_abs_sums();
  abs_frame = frame.row_abs_sums();
}

void spectral_bounds(const HamiltonianParts& h, const TermWeights& w, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (int r = 0; r < h.dimension(); ++r) {
    const double c = w.fixed * h.diag_fixed[r] + w.number * h.diag_number[r];
    const double rad = std::abs(w.fixed) * h.abs_fixed[r] + std::abs(w.charge) * h.abs_charge[r] +
                       std::abs(w.frame) * h.abs_frame[r];
    lo = std::min(lo, c - rad);
    hi = std::max(hi, c + rad);
  }
}

namespace {

inline void apply_row(const HamiltonianParts& h, const TermWeights& w, double shift,
                      const Block& x, Block& y, int r) {
  const int m = static_cast<int>(x.cols());
  const double d = w.fixed * h.diag_fixed[r] + w.number * h.diag_number[r] - shift;
  cplx* out = y.row(r).data();
  const cplx* in = x.row(r).data();
  for (int j = 0; j < m; ++j) out[j] = d * in[j];
  for (int k = h.fixed.row_ptr[r]; k < h.fixed.row_ptr[r + 1]; ++k) {
    const double v = w.fixed * h.fixed.val[k];
    const cplx* src = x.row(h.fixed.col[k]).data();
    for (int j = 0; j < m; ++j) out[j] += v * src[j];
  }
  for (int k = h.charge.row_ptr[r]; k < h.charge.row_ptr[r + 1]; ++k) {
    const double v = w.charge * h.charge.val[k];
    const cplx* src = x.row(h.charge.col[k]).data();
    for (int j = 0; j < m; ++j) out[j] += v * src[j];
  }
  if (w.frame != 0.0) {
    for (int k = h.frame.row_ptr[r]; k < h.frame.row_ptr[r + 1]; ++k) {
      const cplx v(0.0, w.frame * h.frame.val[k]);
      const cplx* src = x.row(h.frame.col[k]).data();
      for (int j = 0; j < m; ++j) out[j] += v * src[j];
    }
  }
}

}  // namespace

void apply_serial(const HamiltonianParts& h, const TermWeights& w, double shift, const Block& x,
                  Block& y) {
  y.resize(x.rows(), x.cols());
  for (int r = 0; r < h.dimension(); ++r) apply_row(h, w, shift, x, y, r);
}

void apply_parallel(const HamiltonianParts& h, const TermWeights& w, double shift, const Block& x,
                    Block& y) {
  y.resize(x.rows(), x.cols());
  const int n = h.dimension();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) apply_row(h, w, shift, x, y, r);
}

int expv(const HamiltonianParts& h, const TermWeights& w, double tau, Block& x,
         ExpvWorkspace& ws, bool parallel) {
  constexpr double kTol = 1e-15;
  constexpr double kMaxStepNorm = 2.0;
  double lo = 0.0, hi = 0.0;
  spectral_bounds(h, w, lo, hi);
  const double sigma = 0.5 * (lo + hi);
  const double rho = 0.5 * (hi - lo);
  const double theta = 2.0 * std::numbers::pi * tau;
  const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(theta) * rho / kMaxStepNorm)));
  const double dtheta = theta / substeps;
  const cplx coef(0.0, -dtheta);

  int matvecs = 0;
  for (int s = 0; s < substeps; ++s) {
    ws.term = x;
    const double scale2 = std::max(x.squaredNorm(), 1e-300);
    for (int k = 1; k < 60; ++k) {
      if (parallel)
        apply_parallel(h, w, sigma, ws.term, ws.next);
      else
        apply_serial(h, w, sigma, ws.term, ws.next);
      ++matvecs;
      ws.next *= coef / static_cast<double>(k);
      x += ws.next;
      std::swap(ws.term, ws.next);
      // Remaining tail is bounded by a geometric series once k exceeds |θρ|.
      if (ws.term.squaredNorm() < kTol * kTol * scale2 && k > std::abs(dtheta) * rho) break;
    }
  }
  x *= std::exp(cplx(0.0, -theta * sigma));
  return matvecs;
}

}  // namespace fluxcz
