#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace fluxcz {

struct SimplexOptions {
  int max_evaluations = 400;
  double f_tol = 1e-10;  // stop when the simplex objective spread falls below this
  double x_tol = 1e-3;   // ... and every vertex lies within x_tol initial steps of the best
};

struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Nelder-Mead inside a box: trial points outside the bounds are mirrored back
// across the violated face. `step` sets the initial simplex edge per axis.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const std::vector<double>& step,
                          const std::vector<std::pair<double, double>>& bounds,
                          const SimplexOptions& options = {});

// Maps x into [lo, hi] by mirror reflection.
double reflect_into(double x, double lo, double hi);

}  // namespace fluxcz
