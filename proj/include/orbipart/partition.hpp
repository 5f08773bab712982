#ifndef ORBIPART_PARTITION_HPP
#define ORBIPART_PARTITION_HPP

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "orbipart/partition_types.hpp"
#include "orbipart/scalar.hpp"

namespace orbipart {

/// Cache of interval solutions keyed by the node-snapped interval. Values are
/// deterministic, so concurrent insert-or-read races are benign.
class IntervalSolutionCache {
 public:
  explicit IntervalSolutionCache(const OrbitGrid& grid, SolverOptions opts = {})
      : grid_(grid), opts_(opts) {}

  /// Solve (a,b) snapped to the grid, memoized.
  const ScalarSolution& solve(double a, double b);
  const OrbitGrid& grid() const { return grid_; }
  const SolverOptions& options() const { return opts_; }
  std::size_t size() const;

 private:
  const OrbitGrid& grid_;
  SolverOptions opts_;
  mutable std::mutex mu_;
  std::map<std::pair<int, int>, std::shared_ptr<const ScalarSolution>> cache_;
};

struct NodalSolution {
  IntervalPartition partition;
  std::vector<ScalarSolution> pieces;
  ReducedFunction signed_profile;
  double total_energy = 0.0;
  int sign_changes = 0;
  double residual_sup_interior = 0.0;  // away from cuts and endpoints
};

struct PartitionOptions {
  int scan_points = 33;         // per-coordinate coarse scan resolution
  int max_scan_evals = 100000;  // cap on scanned cut tuples
  int refine_sweeps = 3;        // golden-section passes per coordinate
  int min_gap_cells = 4;
  SolverOptions solver;
};

struct DegenerateInterval : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double partition_energy(const IntervalPartition& p, IntervalSolutionCache& cache);

struct OptimizedPartition {
  IntervalPartition partition;
  double energy = 0.0;
  int evaluations = 0;
};

OptimizedPartition optimize_partition(IntervalSolutionCache& cache, int M,
                                      const PartitionOptions& opts = {});

NodalSolution assemble_nodal(const IntervalPartition& p, IntervalSolutionCache& cache);

struct SubadditivityReport {
  double lhs = 0.0;  // energy(a,c)
  double rhs = 0.0;  // min(energy(a,b), energy(b,c))
  double margin = 0.0;
  bool pass = false;
};

SubadditivityReport verify_subadditivity(IntervalSolutionCache& cache, double a,
                                         double b, double c, double tol = 1e-9);

bool verify_comparison(double system_c, double partition_value, double tol = 1e-9);

struct MonotonicityReport {
  std::vector<double> energies;  // M = 2 .. M_max
  bool strictly_increasing = false;
  double min_margin = 0.0;
};

MonotonicityReport verify_monotone_in_M(IntervalSolutionCache& cache, int M_max,
                                        const PartitionOptions& opts = {});

}  // namespace orbipart

#endif
