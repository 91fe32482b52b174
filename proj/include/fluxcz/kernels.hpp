#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace fluxcz {

using cplx = std::complex<double>;

// Row-major block of state vectors: one row per basis state, one column per
// propagated vector, so a sparse row touches contiguous memory.
using Block = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  static CsrMatrix from_dense(const Eigen::MatrixXd& m, double drop = 0.0);
  Eigen::MatrixXd to_dense() const;
  Eigen::VectorXd row_abs_sums() const;
  std::size_t nnz() const { return val.size(); }
};

// Real pieces of the composite Hamiltonian. At a given instant
//   H = fixed·(diag_fixed + F) + number·diag_number + charge·K + i·frame·P
// where F, K are real symmetric and P real antisymmetric.
struct HamiltonianParts {
  Eigen::VectorXd diag_fixed;
  Eigen::VectorXd diag_number;
  CsrMatrix fixed;
  CsrMatrix charge;
  CsrMatrix frame;
  Eigen::VectorXd abs_fixed, abs_charge, abs_frame;

  int dimension() const { return static_cast<int>(diag_fixed.size()); }
  void finalize();
};

struct TermWeights {
  double fixed = 1.0;
  double number = 0.0;
  double charge = 0.0;
  double frame = 0.0;
};

inline TermWeights combine(double a, const TermWeights& x, double b, const TermWeights& y) {
  return {a * x.fixed + b * y.fixed, a * x.number + b * y.number, a * x.charge + b * y.charge,
          a * x.frame + b * y.frame};
}

// Gershgorin enclosure [lo, hi] of the spectrum of H(w).
void spectral_bounds(const HamiltonianParts& h, const TermWeights& w, double& lo, double& hi);

// y = (H(w) - shift)·x
void apply_serial(const HamiltonianParts& h, const TermWeights& w, double shift, const Block& x,
                  Block& y);
void apply_parallel(const HamiltonianParts& h, const TermWeights& w, double shift, const Block& x,
                    Block& y);

struct ExpvWorkspace {
  Block term, next;
};

// x <- exp(-i·2π·tau·H(w))·x with tau in ns and H in GHz. Truncated Taylor
// series about the spectral midpoint with substepping. Returns matvec count.
int expv(const HamiltonianParts& h, const TermWeights& w, double tau, Block& x,
         ExpvWorkspace& ws, bool parallel = false);

}  // namespace fluxcz
