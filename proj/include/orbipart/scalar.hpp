#ifndef ORBIPART_SCALAR_HPP
#define ORBIPART_SCALAR_HPP

#include <optional>
#include <stdexcept>

#include "orbipart/grid.hpp"

namespace orbipart {

struct SolverOptions {
  int max_iters = 20000;
  double tol_energy = 1e-9;    // relative energy stagnation threshold
  double tol_grad = 1e-8;      // sup-norm of the paired gradient
  double tol_res = 1e-4;       // ODE residual bound solutions must satisfy
  double tol_nehari = 1e-6;    // relative Nehari-identity slack of solutions
  int newton_max_iters = 40;   // strong-form polish
  bool polish = true;
  unsigned seed = 0;           // recorded for reproducibility of restarts
};

/// Positive least-energy profile on an orbit interval, its energy
/// (1/N)(1/4) int |w|^{2*} h dt, and solver diagnostics.
struct ScalarSolution {
  double a = 0.0;
  double b = 0.0;
  ReducedFunction profile;
  double energy = 0.0;
  double normsq = 0.0;
  double crit = 0.0;
  double residual_sup = 0.0;
  double nehari_gap = 0.0;  // |normsq - crit| / normsq
  int iterations = 0;
  bool polished = false;
};

struct ConvergenceFailure : std::runtime_error {
  ScalarSolution last;
  ConvergenceFailure(std::string what, ScalarSolution s)
      : std::runtime_error(std::move(what)), last(std::move(s)) {}
};

/// Scale t with || t w ||_h^2 = (1/4) int |t w|^{2*} h dt, i.e.
/// t = (||w||^2 / crit(w))^{1/(2*-2)}.
double nehari_scale(const ReducedFunction& w);

/// Minimizes the energy over nonnegative profiles vanishing outside (a,b)
/// (no condition at a=0 or b=pi). Rayleigh-quotient descent with BB steps,
/// then a damped-Newton polish of the strong-form collocation equations.
ScalarSolution least_energy_on_interval(const OrbitGrid& grid, double a, double b,
                                        const SolverOptions& opts = {});

/// Trajectory of the reduced equation integrated from one endpoint with
/// w(end) = w0, w'(end) = 0 (series start across the first cell, then RK4).
struct ShootResult {
  ReducedFunction trajectory;
  std::optional<double> first_zero;  // angle of the first sign change
  bool blew_up = false;
};

ShootResult shoot_reduced_ode(const OrbitGrid& grid, double w0, bool from_left = true);

/// Bisects w0 so that the first zero of the left-shot trajectory lands at
/// angle b_target (monotone: larger w0 crosses sooner).
double shoot_match_zero(const OrbitGrid& grid, double b_target,
                        double w0_lo = 0.0, double w0_hi = 0.0);

}  // namespace orbipart

#endif
