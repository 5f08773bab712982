#include "orbipart/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace orbipart {

namespace {
constexpr double kPi = std::numbers::pi;

// Gamma(d/2) for integer d >= 1 via Gamma(x+1) = x Gamma(x),
// Gamma(1/2) = sqrt(pi), Gamma(1) = 1.
double gamma_half_integer(int d) {
  double x = 0.5 * d;
  double g = (d % 2 == 0) ? 1.0 : std::sqrt(kPi);
  for (double y = (d % 2 == 0) ? 1.0 : 0.5; y < x - 0.25; y += 1.0) {
    g *= y;
  }
  return g;
}
}  // namespace

SymmetryConfig make_symmetry_config(int m, int n) {
  if (m < 2 || n < 2) {
    throw std::domain_error("symmetry config requires m >= 2 and n >= 2, got m=" +
                            std::to_string(m) + " n=" + std::to_string(n));
  }
  SymmetryConfig cfg;
  cfg.m = m;
  cfg.n = n;
  cfg.N = m + n - 1;
  cfg.a_N = static_cast<double>(cfg.N) * (cfg.N - 2) / 4.0;
  cfg.p_crit = 2.0 * cfg.N / (cfg.N - 2);
  cfg.weight_const = 2.0 * sphere_area(m) * sphere_area(n);
  return cfg;
}

double sphere_area(int d) {
  if (d < 1) {
    throw std::domain_error("sphere_area requires d >= 1");
  }
  return 2.0 * std::pow(kPi, 0.5 * d) / gamma_half_integer(d);
}

double weight_h(double t, const SymmetryConfig& cfg) {
  if (t < -1e-14 || t > kPi + 1e-14) {
    throw std::domain_error("weight_h: angle outside [0,pi]");
  }
  if (t < 1e-14) return 0.0;
  if (t > kPi - 1e-14) return 0.0;
  return cfg.weight_const * std::pow(std::cos(0.5 * t), cfg.m - 1) *
         std::pow(std::sin(0.5 * t), cfg.n - 1);
}

double log_weight_h_deriv(double t, const SymmetryConfig& cfg) {
  if (t <= 0.0 || t >= kPi) {
    throw std::domain_error("log_weight_h_deriv: angle outside (0,pi)");
  }
  return -0.5 * (cfg.m - 1) * std::tan(0.5 * t) +
         0.5 * (cfg.n - 1) / std::tan(0.5 * t);
}

double orbit_map(double z1_norm_sq) {
  if (z1_norm_sq < 0.0 || z1_norm_sq > 1.0) {
    throw std::domain_error("orbit_map: |z1|^2 outside [0,1]");
  }
  return std::acos(2.0 * z1_norm_sq - 1.0);
}

std::pair<double, double> boundary_radii(double a) {
  if (a <= 0.0 || a >= kPi) {
    throw std::domain_error("boundary_radii: degenerate orbit, angle outside (0,pi)");
  }
  return {std::cos(0.5 * a), std::sin(0.5 * a)};
}

double conformal_factor(double x_norm, const SymmetryConfig& cfg) {
  if (x_norm < 0.0) {
    throw std::domain_error("conformal_factor: negative radius");
  }
  return std::pow(2.0 / (1.0 + x_norm * x_norm), 0.5 * (cfg.N - 2));
}

}  // namespace orbipart
