#include "nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace enrolcast::detail {

namespace {

double safe_eval(const std::function<double(const std::vector<double>&)>& f,
                 const std::vector<double>& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> start, double step, int max_iterations,
                          double reltol) {
  const std::size_t n = start.size();
  SimplexResult result;
  if (n == 0) {
    result.x = start;
    result.value = safe_eval(f, start);
    result.converged = true;
    return result;
  }

  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = safe_eval(f, simplex[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> v2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };

  auto point = [n](const std::vector<double>& c, const std::vector<double>& w,
                   double coef) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = c[i] + coef * (w[i] - c[i]);
    return out;
  };

  int it = 0;
  sort_simplex();
  while (true) {
    const double fmin = values.front();
    const double fmax = values.back();
    if (std::isfinite(fmax) && fmax - fmin <= reltol * (std::abs(fmin) + reltol)) {
      result.converged = true;
      break;
    }
    if (it >= max_iterations) break;
    ++it;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;

    const auto& worst = simplex.back();
    const auto xr = point(centroid, worst, -1.0);
    const double fr = safe_eval(f, xr);
    if (fr < values.front()) {
      const auto xe = point(centroid, worst, -2.0);
      const double fe = safe_eval(f, xe);
      if (fe < fr) {
        simplex.back() = xe;
        values.back() = fe;
      } else {
        simplex.back() = xr;
        values.back() = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex.back() = xr;
      values.back() = fr;
    } else {
      const bool outside = fr < values.back();
      const auto xc = outside ? point(centroid, worst, -0.5) : point(centroid, worst, 0.5);
      const double fc = safe_eval(f, xc);
      if (fc < (outside ? fr : values.back())) {
        simplex.back() = xc;
        values.back() = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          simplex[i] = point(simplex[0], simplex[i], 0.5);
          values[i] = safe_eval(f, simplex[i]);
        }
      }
    }
    sort_simplex();
  }
  result.x = simplex.front();
  result.value = values.front();
  result.iterations = it;
  return result;
}

}  // namespace enrolcast::detail
