#include "orbipart/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace orbipart {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kGolden = 0.6180339887498949;  // 1/phi
}  // namespace

double IntervalPartition::upper(int i) const {
  return i == M - 1 ? kPi : cuts[i];
}

const ScalarSolution& IntervalSolutionCache::solve(double a, double b) {
  int ia = grid_.nearest_node(a), ib = grid_.nearest_node(b);
  std::pair<int, int> key{ia, ib};
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  auto sol = std::make_shared<const ScalarSolution>(
      least_energy_on_interval(grid_, grid_.nodes[ia], grid_.nodes[ib], opts_));
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = cache_.emplace(key, std::move(sol));
  return *it->second;
}

std::size_t IntervalSolutionCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.size();
}

namespace {
void validate_partition(const IntervalPartition& p, const OrbitGrid& grid,
                        int min_gap_cells) {
  if (p.M < 2 || static_cast<int>(p.cuts.size()) != p.M - 1) {
    throw std::invalid_argument("partition: M >= 2 cuts mismatch");
  }
  double prev = 0.0;
  for (double c : p.cuts) {
    if (!(c > prev) || !(c < kPi)) {
      throw std::invalid_argument("partition: cuts must increase strictly in (0,pi)");
    }
    prev = c;
  }
  for (int i = 0; i < p.M; ++i) {
    int ia = grid.nearest_node(p.lower(i)), ib = grid.nearest_node(p.upper(i));
    if (ib - ia < min_gap_cells) {
      throw DegenerateInterval("partition interval " + std::to_string(i) +
                               " spans fewer than the minimal gap of cells");
    }
  }
}
}  // namespace

double partition_energy(const IntervalPartition& p, IntervalSolutionCache& cache) {
  validate_partition(p, cache.grid(), 4);
  double total = 0.0;
  for (int i = 0; i < p.M; ++i) {
    total += cache.solve(p.lower(i), p.upper(i)).energy;
  }
  return total;
}

namespace {
struct ScanState {
  IntervalSolutionCache& cache;
  int M;
  int evals = 0;
  int max_evals;
  double best = 1e300;
  std::vector<int> best_idx;

  double eval(const std::vector<int>& idx) {
    const OrbitGrid& g = cache.grid();
    ++evals;
    double total = 0.0;
    int prev = 0;
    for (int i = 0; i < M; ++i) {
      int next = (i == M - 1) ? g.K : idx[i];
      total += cache.solve(g.nodes[prev], g.nodes[next]).energy;
      prev = next;
    }
    return total;
  }
};

// Recursive scan over strictly increasing node-index tuples drawn from a
// per-coordinate candidate list.
void scan_rec(ScanState& st, const std::vector<int>& candidates, int coord,
              std::vector<int>& idx, int min_gap) {
  if (st.evals >= st.max_evals) return;
  if (coord == st.M - 1) {
    double e = st.eval(idx);
    if (e < st.best) {
      st.best = e;
      st.best_idx = idx;
    }
    return;
  }
  int lower = (coord == 0) ? min_gap : idx[coord - 1] + min_gap;
  for (int c : candidates) {
    if (c < lower) continue;
    if (c > st.cache.grid().K - min_gap * (st.M - 1 - coord)) break;
    idx[coord] = c;
    scan_rec(st, candidates, coord + 1, idx, min_gap);
    if (st.evals >= st.max_evals) return;
  }
}
}  // namespace

OptimizedPartition optimize_partition(IntervalSolutionCache& cache, int M,
                                      const PartitionOptions& opts) {
  if (M < 2) throw std::invalid_argument("optimize_partition: M >= 2 required");
  const OrbitGrid& g = cache.grid();
  const int gap = opts.min_gap_cells;

  // coarse pass: per-coordinate resolution capped so the tuple count stays
  // within max_scan_evals
  int points = opts.scan_points;
  while (M > 2 && std::pow(static_cast<double>(points), M - 1) >
                      static_cast<double>(opts.max_scan_evals) &&
         points > 9) {
    points = points / 2 + 1;
  }
  std::vector<int> candidates;
  for (int q = 0; q < points; ++q) {
    int node = gap + static_cast<int>(std::llround(
                         static_cast<double>(q) * (g.K - 2 * gap) / (points - 1)));
    if (candidates.empty() || node > candidates.back()) candidates.push_back(node);
  }
  ScanState st{cache, M, 0, opts.max_scan_evals};
  std::vector<int> idx(M - 1, 0);
  scan_rec(st, candidates, 0, idx, gap);
  if (st.best_idx.empty()) {
    throw std::runtime_error("optimize_partition: scan found no admissible tuple");
  }

  // second scan pass around the incumbent at node resolution of the coarse step
  int coarse_step = std::max(1, (g.K - 2 * gap) / (points - 1));
  std::vector<int> cur = st.best_idx;
  for (int pass = 0; pass < 2; ++pass) {
    int step = std::max(1, coarse_step >> (2 * pass + 1));
    for (int coord = 0; coord < M - 1; ++coord) {
      std::vector<int> local;
      for (int d = -3; d <= 3; ++d) {
        int c = cur[coord] + d * step;
        if (c >= gap && c <= g.K - gap) local.push_back(c);
      }
      for (int c : local) {
        std::vector<int> trial = cur;
        trial[coord] = c;
        bool ok = true;
        int prev = 0;
        for (int i = 0; i < M - 1; ++i) {
          if (trial[i] - prev < gap) ok = false;
          prev = trial[i];
        }
        if (g.K - prev < gap) ok = false;
        if (!ok) continue;
        double e = st.eval(trial);
        if (e < st.best) {
          st.best = e;
          st.best_idx = trial;
        }
      }
      cur = st.best_idx;
    }
  }

  // golden-section polish per coordinate on the node-snapped objective
  auto eval_cut = [&](std::vector<double>& cuts, int coord, double t) {
    cuts[coord] = t;
    IntervalPartition p{g.cfg, M, cuts};
    return partition_energy(p, cache);
  };
  std::vector<double> cuts(M - 1);
  for (int i = 0; i < M - 1; ++i) cuts[i] = g.nodes[st.best_idx[i]];
  double best = st.best;
  double bracket = std::max(2.0 * coarse_step, 4.0) * kPi / g.K;
  for (int sweep = 0; sweep < opts.refine_sweeps; ++sweep) {
    for (int coord = 0; coord < M - 1; ++coord) {
      double lo = std::max(cuts[coord] - bracket,
                           (coord == 0 ? 0.0 : cuts[coord - 1]) + gap * kPi / g.K);
      double hi = std::min(cuts[coord] + bracket,
                           (coord == M - 2 ? kPi : cuts[coord + 1]) - gap * kPi / g.K);
      if (!(lo < hi)) continue;
      double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
      std::vector<double> work = cuts;
      double f1 = eval_cut(work, coord, x1), f2 = eval_cut(work, coord, x2);
      for (int it = 0; it < 40 && (hi - lo) > 0.25 * kPi / g.K; ++it) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - kGolden * (hi - lo);
          f1 = eval_cut(work, coord, x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + kGolden * (hi - lo);
          f2 = eval_cut(work, coord, x2);
        }
        ++st.evals;
      }
      double xm = (f1 <= f2) ? x1 : x2, fm = std::min(f1, f2);
      if (fm < best) {
        best = fm;
        cuts[coord] = g.nodes[g.nearest_node(xm)];
      }
    }
    bracket *= 0.5;
  }

  OptimizedPartition out;
  out.partition = IntervalPartition{g.cfg, M, cuts};
  // snap cuts to their nodes for reproducibility
  for (double& c : out.partition.cuts) c = g.nodes[g.nearest_node(c)];
  out.energy = partition_energy(out.partition, cache);
  out.evaluations = st.evals;
  for (int i = 0; i < M; ++i) {
    int ia = g.nearest_node(out.partition.lower(i)),
        ib = g.nearest_node(out.partition.upper(i));
    if (ib - ia <= opts.min_gap_cells) {
      throw DegenerateInterval("optimize_partition: optimizer reached the simplex "
                               "boundary; the grid under-resolves this M");
    }
  }
  return out;
}

NodalSolution assemble_nodal(const IntervalPartition& p, IntervalSolutionCache& cache) {
  const OrbitGrid& g = cache.grid();
  validate_partition(p, g, 4);
  NodalSolution out;
  out.partition = p;
  out.signed_profile = ReducedFunction(g);
  for (int i = 0; i < p.M; ++i) {
    const ScalarSolution& sol = cache.solve(p.lower(i), p.upper(i));
    out.pieces.push_back(sol);
    double sign = (i % 2 == 0) ? 1.0 : -1.0;
    out.signed_profile.values += sign * sol.profile.values;
    out.total_energy += sol.energy;
  }
  // sign changes along the nodes, zeros skipped
  int changes = 0;
  double last = 0.0;
  for (int j = 0; j <= g.K; ++j) {
    double v = out.signed_profile.values[j];
    if (v == 0.0) continue;
    if (last != 0.0 && v * last < 0.0) ++changes;
    last = v;
  }
  out.sign_changes = changes;
  // residual away from the cuts (3 cells each side) and the singular ends
  double sup = 0.0;
  ReducedFunction r = reduced_residual(out.signed_profile, 0.0, kPi);
  std::vector<int> cut_nodes;
  for (double c : p.cuts) cut_nodes.push_back(g.nearest_node(c));
  for (int j = 3; j <= g.K - 3; ++j) {
    bool near_cut = false;
    for (int cn : cut_nodes) {
      if (std::abs(j - cn) < 3) near_cut = true;
    }
    if (near_cut) continue;
    sup = std::max(sup, std::abs(r.values[j]));
  }
  out.residual_sup_interior = sup;
  return out;
}

SubadditivityReport verify_subadditivity(IntervalSolutionCache& cache, double a,
                                         double b, double c, double tol) {
  if (!(0.0 < a && a < b && b < c && c < kPi)) {
    throw std::invalid_argument("verify_subadditivity: need 0 < a < b < c < pi");
  }
  SubadditivityReport rep;
  rep.lhs = cache.solve(a, c).energy;
  rep.rhs = std::min(cache.solve(a, b).energy, cache.solve(b, c).energy);
  rep.margin = rep.rhs - rep.lhs;
  rep.pass = rep.lhs < rep.rhs - tol;
  return rep;
}

bool verify_comparison(double system_c, double partition_value, double tol) {
  return system_c <= partition_value + tol;
}

MonotonicityReport verify_monotone_in_M(IntervalSolutionCache& cache, int M_max,
                                        const PartitionOptions& opts) {
  if (M_max < 3) throw std::invalid_argument("verify_monotone_in_M: M_max >= 3");
  MonotonicityReport rep;
  for (int M = 2; M <= M_max; ++M) {
    rep.energies.push_back(optimize_partition(cache, M, opts).energy);
  }
  rep.strictly_increasing = true;
  rep.min_margin = 1e300;
  for (size_t i = 0; i + 1 < rep.energies.size(); ++i) {
    double margin = rep.energies[i + 1] - rep.energies[i];
    rep.min_margin = std::min(rep.min_margin, margin);
    if (!(margin > 0.0)) rep.strictly_increasing = false;
  }
  return rep;
}

}  // namespace orbipart
