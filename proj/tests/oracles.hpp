#ifndef ORBIPART_TESTS_ORACLES_HPP
#define ORBIPART_TESTS_ORACLES_HPP

// Independent reference computations for the tests: dense trapezoid
// quadrature and simple finite differences. These deliberately avoid the
// library's own quadrature and stencil code paths.

#include <cmath>
#include <functional>

namespace oracles {

// Composite trapezoid with n+1 points; n defaults to one million intervals.
inline double trapezoid(const std::function<double(double)>& f, double a, double b,
                        int n = 1000000) {
  double h = (b - a) / n;
  double acc = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) acc += f(a + i * h);
  return acc * h;
}

// Richardson-refined central difference of a scalar functional.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

}  // namespace oracles

#endif
