#pragma once

#include <functional>
#include <vector>

namespace enrolcast::detail {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimisation (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Converged when the spread of function
/// values satisfies f_max - f_min <= reltol (|f_min| + reltol).
/// Deterministic for a given start and step.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> start, double step, int max_iterations,
                          double reltol);

}  // namespace enrolcast::detail
