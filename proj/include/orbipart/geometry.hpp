#ifndef ORBIPART_GEOMETRY_HPP
#define ORBIPART_GEOMETRY_HPP

#include <utility>

namespace orbipart {

/// Block symmetry choice (m,n) on the N-sphere, N = m+n-1, together with the
/// constants derived from it. All downstream objects carry one of these.
struct SymmetryConfig {
  int m = 0;
  int n = 0;
  int N = 0;               // sphere dimension, m+n-1
  double a_N = 0.0;        // N(N-2)/4, linear coefficient
  double p_crit = 0.0;     // 2N/(N-2), critical exponent
  double weight_const = 0.0;  // 2 |S^{m-1}| |S^{n-1}|
};

/// Validates m,n >= 2 and fills in the derived constants.
SymmetryConfig make_symmetry_config(int m, int n);

/// Surface measure of the unit (d-1)-sphere in R^d, 2 pi^{d/2} / Gamma(d/2).
/// Gamma at half-integers is evaluated by the exact recurrence.
double sphere_area(int d);

/// Orbit-space weight h(t) = weight_const cos^{m-1}(t/2) sin^{n-1}(t/2),
/// t in [0,pi]. Inputs within 1e-14 of an endpoint are clamped to it.
double weight_h(double t, const SymmetryConfig& cfg);

/// d/dt log h(t) = -((m-1)/2) tan(t/2) + ((n-1)/2) cot(t/2), t in (0,pi).
double log_weight_h_deriv(double t, const SymmetryConfig& cfg);

/// Angle of the orbit through a point with |z1|^2 = z1_norm_sq:
/// arccos(2 z1_norm_sq - 1) in [0,pi].
double orbit_map(double z1_norm_sq);

/// Radii (r1, r2) = (cos(a/2), sin(a/2)) of the product torus lying over an
/// interior orbit angle a in (0,pi). r1^2 + r2^2 = 1.
std::pair<double, double> boundary_radii(double a);

/// Conformal factor psi(|x|) = (2/(1+|x|^2))^{(N-2)/2} of the stereographic
/// chart.
double conformal_factor(double x_norm, const SymmetryConfig& cfg);

}  // namespace orbipart

#endif
