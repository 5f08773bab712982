#ifndef ORBIPART_GRID_HPP
#define ORBIPART_GRID_HPP

#include <Eigen/Core>
#include <iosfwd>
#include <string>

#include "orbipart/geometry.hpp"

namespace orbipart {

using Eigen::ArrayXd;

/// Discretization of the orbit interval [0,pi]: K+1 nodes (graded toward the
/// endpoints when grading > 1), quadrature weights for integrals against dt,
/// nodal weight values, and the cell quantities used by the gradient energy.
///
/// quad_weights is an endpoint-corrected (Gregory) composite trapezoid rule
/// mapped through the grading, accurate enough to integrate h to ~1e-9
/// relative at K >= 128. cell_h are exact (Gauss) cell integrals of h and
/// lumped_h the matching hat-function masses; lumped_h > 0 at every node,
/// which makes it usable as a pointwise pairing mass.
struct OrbitGrid {
  SymmetryConfig cfg;
  double grading = 1.0;
  ArrayXd nodes;         // K+1, strictly increasing, nodes[0]=0, nodes[K]=pi
  ArrayXd quad_weights;  // K+1
  ArrayXd h_values;      // K+1, h at nodes, exact zeros at the ends
  ArrayXd cell_width;    // K
  ArrayXd cell_h;        // K,   integral of h over each cell
  ArrayXd lumped_h;      // K+1, integral of h * hat_j
  int K = 0;

  int size() const { return K + 1; }
  /// Index of the node nearest to angle t.
  int nearest_node(double t) const;
};

/// Builds the grid. grading = 1 is the uniform grid; grading g > 1 maps
/// x -> x^g / (x^g + (1-x)^g), concentrating nodes at both endpoints.
OrbitGrid build_grid(const SymmetryConfig& cfg, int K, double grading = 1.0);

/// Grading used by default for a symmetry type: uniform unless the weight
/// decays steeply at an endpoint (max(m,n) >= 4).
double default_grading(const SymmetryConfig& cfg);

/// Orbit-space profile w sampled at the grid nodes. support_lo/support_hi
/// mark the node range [lo,hi] outside of which the values are zero; a
/// function with no support restriction has lo = 0, hi = K.
struct ReducedFunction {
  const OrbitGrid* grid = nullptr;
  ArrayXd values;
  int support_lo = 0;
  int support_hi = 0;

  ReducedFunction() = default;
  explicit ReducedFunction(const OrbitGrid& g)
      : grid(&g), values(ArrayXd::Zero(g.size())), support_lo(0), support_hi(g.K) {}
  ReducedFunction(const OrbitGrid& g, ArrayXd vals, int lo, int hi)
      : grid(&g), values(std::move(vals)), support_lo(lo), support_hi(hi) {}
};

/// || w ||_h^2 = int (|w'|^2 + (a_N/4) w^2) h dt. The gradient part is the
/// piecewise-linear cell energy sum_j cell_h[j] ((w_{j+1}-w_j)/dt_j)^2, the
/// mass part uses quad_weights.
double weighted_h1_normsq(const ReducedFunction& w);

/// (1/4) int |w|^p h dt.
double weighted_crit_integral(const ReducedFunction& w, double p);

/// (1/4) int |wj|^alpha |wi|^beta h dt; exactly zero for node-disjoint
/// supports. Requires alpha, beta > 1 and alpha + beta = 2*.
double weighted_overlap(const ReducedFunction& wi, const ReducedFunction& wj,
                        double alpha, double beta);

/// Pointwise residual of the reduced equation
///   -w'' - (h'/h) w' + (a_N/4) w - (1/4)|w|^{2*-2} w
/// at nodes strictly inside (a,b), centered second-order stencils. Nodes
/// outside carry zero.
ReducedFunction reduced_residual(const ReducedFunction& w, double a, double b);

/// Sup of |reduced_residual| over nodes at least `margin_cells` node steps
/// inside the support interval.
double residual_sup(const ReducedFunction& w, double a, double b, int margin_cells = 3);

/// Pointwise nodal derivative w' with centered interior stencils and
/// one-sided second-order stencils at the support boundary.
ArrayXd nodal_derivative(const ReducedFunction& w);

/// Writes "t,w" CSV with 17 significant digits.
void write_csv(const ReducedFunction& w, std::ostream& os);
void write_csv(const ReducedFunction& w, const std::string& path);

void check_same_grid(const ReducedFunction& a, const ReducedFunction& b);

}  // namespace orbipart

#endif
