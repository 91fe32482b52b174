#include "fluxcz/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fluxcz {

double reflect_into(double x, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("empty bound interval");
  const double w = hi - lo;
  double r = std::fmod(x - lo, 2.0 * w);
  if (r < 0.0) r += 2.0 * w;
  return r <= w ? lo + r : hi - (r - w);
}

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const std::vector<double>& step,
                          const std::vector<std::pair<double, double>>& bounds,
                          const SimplexOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0 || step.size() != n || bounds.size() != n)
    throw std::invalid_argument("simplex dimensions disagree");
  auto clamp_box = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = reflect_into(x[i], bounds[i].first, bounds[i].second);
    return x;
  };

  SimplexResult out;
  auto eval = [&](const std::vector<double>& x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  std::vector<std::vector<double>> p(n + 1, clamp_box(x0));
  for (std::size_t i = 0; i < n; ++i) {
    p[i + 1][i] += step[i];
    p[i + 1] = clamp_box(p[i + 1]);
  }
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(p[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> q(n + 1);
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      q[i] = p[order[i]];
      g[i] = fv[order[i]];
    }
    p.swap(q);
    fv.swap(g);
  };
  auto towards = [&](const std::vector<double>& c, const std::vector<double>& x, double t) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = c[i] + t * (x[i] - c[i]);
    return clamp_box(y);
  };

  while (true) {
    sort_simplex();
    double xspread = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        xspread = std::max(xspread, std::abs(p[k][i] - p[0][i]) / std::abs(step[i]));
    if (fv[n] - fv[0] < options.f_tol && xspread < options.x_tol) {
      out.converged = true;
      break;
    }
    if (out.evaluations >= options.max_evaluations) break;

    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) c[i] += p[k][i] / static_cast<double>(n);

    const std::vector<double> xr = towards(c, p[n], -1.0);
    const double fr = eval(xr);
    if (fr < fv[0]) {
      const std::vector<double> xe = towards(c, p[n], -2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        p[n] = xe;
        fv[n] = fe;
      } else {
        p[n] = xr;
        fv[n] = fr;
      }
      continue;
    }
    if (fr < fv[n - 1]) {
      p[n] = xr;
      fv[n] = fr;
      continue;
    }
    const bool outside = fr < fv[n];
    const std::vector<double> xc = towards(c, outside ? xr : p[n], 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[n])) {
      p[n] = xc;
      fv[n] = fc;
      continue;
    }
    for (std::size_t k = 1; k <= n; ++k) {
      p[k] = towards(p[0], p[k], 0.5);
      fv[k] = eval(p[k]);
    }
  }
  out.x = p[0];
  out.f = fv[0];
  return out;
}

}  // namespace fluxcz
