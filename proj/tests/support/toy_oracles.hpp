#pragma once

// Exact small-matrix references for the perturbative formulas.

#include <Eigen/Dense>
#include <cmath>
#include <unsupported/Eigen/KroneckerProduct>

namespace toy {

// Three harmonic modes with position-position couplings
//   H = ω0 a†a + ω1 b†b + ωc c†c + g0 x_a x_c + g1 x_b x_c + g01 x_a x_b,
// x = (m + m†), truncated to `levels` quanta per mode. Returns the splitting
// of the two dressed single-plasmon states when ω0 = ω1.
inline double three_mode_splitting(double omega_p, double omega_c, double g0, double g1,
                                   double g01, int levels = 5) {
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(levels, levels);
  for (int k = 1; k < levels; ++k) lower(k - 1, k) = std::sqrt(static_cast<double>(k));
  const Eigen::MatrixXd x = lower + lower.transpose();
  const Eigen::MatrixXd num = lower.transpose() * lower;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(levels, levels);
  auto k3 = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
    Eigen::MatrixXd ab = Eigen::kroneckerProduct(a, b);
    return Eigen::MatrixXd(Eigen::kroneckerProduct(ab, c));
  };
  const Eigen::MatrixXd h = omega_p * k3(num, id, id) + omega_p * k3(id, num, id) +
                            omega_c * k3(id, id, num) + g0 * k3(x, id, x) + g1 * k3(id, x, x) +
                            g01 * k3(x, x, id);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  // Ground, then the plasmon pair (ω_p < ω_c).
  return es.eigenvalues()[2] - es.eigenvalues()[1];
}

// Two-level dressed shift of the upper mode of [[ω_p, g], [g, ω_c]].
inline double two_mode_shift(double omega_p, double omega_c, double g) {
  const double d = omega_p - omega_c;
  const double root = std::sqrt(0.25 * d * d + g * g);
  const double mid = 0.5 * (omega_p + omega_c);
  const double dressed = d > 0 ? mid + root : mid - root;
  return dressed - omega_p;
}

}  // namespace toy
