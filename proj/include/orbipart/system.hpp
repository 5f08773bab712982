#ifndef ORBIPART_SYSTEM_HPP
#define ORBIPART_SYSTEM_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "orbipart/grid.hpp"
#include "orbipart/partition_types.hpp"
#include "orbipart/scalar.hpp"

namespace orbipart {

using Eigen::MatrixXd;

/// Symmetric competitive coupling: lambda_ij = lambda_ji < 0 off-diagonal,
/// alpha_ij = beta_ji > 1, alpha_ij + beta_ij = 2*.
struct CouplingMatrix {
  int M = 0;
  MatrixXd lambda;
  MatrixXd alpha;
  MatrixXd beta;
};

/// Uniform coupling lambda with the symmetric exponent split alpha = beta = 2*/2.
CouplingMatrix make_uniform_coupling(int M, double lambda, const SymmetryConfig& cfg);
void validate_coupling(const CouplingMatrix& c, const SymmetryConfig& cfg);

struct SystemState {
  std::vector<ReducedFunction> components;
  CouplingMatrix coupling;
};

struct EnergyReport {
  std::vector<double> per_component_normsq;
  std::vector<double> per_component_crit;
  MatrixXd overlaps;     // overlaps(i,j) = (1/4) int |w_j|^a_ij |w_i|^b_ij h
  double total_J = 0.0;  // functional value
  double c_value = 0.0;  // (1/N) sum ||w_i||^2
};

struct SystemOptions {
  SolverOptions scalar;    // tolerances shared with the scalar stage
  int max_sweeps = 20000;
  double tol_energy = 1e-10;
  int projection_max_iters = 200;
  double projection_damping = 0.5;
  double projection_tol = 1e-12;
  int max_restarts = 3;
  double support_threshold = 0.01;  // fraction of component max
};

struct ProjectionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SegregationIncomplete : std::runtime_error {
  using std::runtime_error::runtime_error;
};

EnergyReport system_energy(const SystemState& state);

/// Pointwise pairing gradient of the functional per component: partials of
/// the discrete energy divided by the positive lumped mass, so that
/// dJ[v] = sum_j lumped_h[j] * gradient[j] * v[j] exactly.
std::vector<ReducedFunction> system_gradient(const SystemState& state);

/// Scales each component so all M Nehari identities hold, by the damped
/// fixed point on the scale vector. Throws ProjectionFailure when the
/// iteration does not settle (strong overlap with large |lambda|).
SystemState project_to_system_nehari(const SystemState& state,
                                     const SystemOptions& opts = {});

struct MinimizeResult {
  SystemState state;
  EnergyReport report;
  int sweeps = 0;
  bool converged = false;
  int restarts = 0;
};

/// Alternating per-component descent with nonnegativity retraction and
/// Nehari projection after every sweep. init must be fully nontrivial.
MinimizeResult minimize_system(const OrbitGrid& grid, const CouplingMatrix& coupling,
                               const SystemState& init, const SystemOptions& opts = {});

/// Canonical fully nontrivial start: M disjoint sine bumps on the uniform
/// M-way split of (0,pi), Nehari-rescaled.
SystemState initial_bumps(const OrbitGrid& grid, const CouplingMatrix& coupling);

struct StageResult {
  double lambda = 0.0;
  SystemState state;
  EnergyReport report;
  int sweeps = 0;
  bool converged = false;
  double d_floor = 0.0;
};

struct ContinuationResult {
  std::vector<StageResult> stages;
  bool completed = false;
  int failed_stage = -1;
};

/// Runs minimize_system along the decreasing lambda schedule with warm
/// starts; a stage whose warm start cannot be projected is re-separated
/// (each node kept only by its dominant component).
ContinuationResult lambda_continuation(const OrbitGrid& grid,
                                       const std::vector<double>& schedule, int M,
                                       const SystemOptions& opts = {});

/// Orders the components along (0,pi) by the super-threshold node sets
/// (threshold is a fraction of each component's max) and returns the cuts
/// midway between consecutive support edges. Throws SegregationIncomplete
/// when a super-threshold set is not one node interval.
IntervalPartition extract_supports(const SystemState& state, double threshold);

}  // namespace orbipart

#endif
