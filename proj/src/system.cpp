#include "orbipart/system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace orbipart {

namespace {
constexpr double kPi = std::numbers::pi;

double pow_abs(double w, double e) { return std::pow(std::abs(w), e); }

const OrbitGrid& grid_of(const SystemState& s) {
  if (s.components.empty() || s.components[0].grid == nullptr) {
    throw std::invalid_argument("system state has no components");
  }
  const OrbitGrid* g = s.components[0].grid;
  for (const auto& w : s.components) {
    if (w.grid != g) throw std::invalid_argument("components on different grids");
  }
  return *g;
}

// Derivative of the full energy with respect to the nodal values of
// component i (plain partials, no mass pairing).
ArrayXd raw_partial(const SystemState& s, int i) {
  const OrbitGrid& g = grid_of(s);
  const CouplingMatrix& c = s.coupling;
  const double p = g.cfg.p_crit;
  const ArrayXd& vi = s.components[i].values;
  ArrayXd out(g.size());
  // (1/2) d||w||^2 : staggered cells + quadrature mass
  out = 0.25 * g.cfg.a_N * g.quad_weights * g.h_values * vi;
  for (int j = 0; j < g.K; ++j) {
    double f = g.cell_h[j] * (vi[j + 1] - vi[j]) / (g.cell_width[j] * g.cell_width[j]);
    out[j] -= f;
    out[j + 1] += f;
  }
  // -(1/2*) d crit
  for (int j = 0; j < g.size(); ++j) {
    out[j] -= 0.25 * g.quad_weights[j] * g.h_values[j] * pow_abs(vi[j], p - 2.0) * vi[j];
  }
  // coupling: - sum_j lambda_ij beta_ij (1/4) |w_j|^a |w_i|^{b-2} w_i
  for (int k = 0; k < c.M; ++k) {
    if (k == i) continue;
    double lam = c.lambda(i, k), a = c.alpha(i, k), b = c.beta(i, k);
    const ArrayXd& vk = s.components[k].values;
    for (int j = 0; j < g.size(); ++j) {
      if (vk[j] == 0.0 || vi[j] == 0.0) continue;
      out[j] -= lam * b * 0.25 * g.quad_weights[j] * g.h_values[j] *
                pow_abs(vk[j], a) * pow_abs(vi[j], b - 2.0) * vi[j];
    }
  }
  return out;
}

MatrixXd overlap_matrix(const SystemState& s) {
  const CouplingMatrix& c = s.coupling;
  MatrixXd F = MatrixXd::Zero(c.M, c.M);
  for (int i = 0; i < c.M; ++i) {
    for (int j = 0; j < c.M; ++j) {
      if (i == j) continue;
      F(i, j) = weighted_overlap(s.components[i], s.components[j], c.alpha(i, j),
                                 c.beta(i, j));
    }
  }
  return F;
}
}  // namespace

CouplingMatrix make_uniform_coupling(int M, double lambda, const SymmetryConfig& cfg) {
  if (M < 1) throw std::invalid_argument("coupling: M >= 1 required");
  if (M > 1 && !(lambda < 0.0)) {
    throw std::invalid_argument("coupling: lambda < 0 required");
  }
  CouplingMatrix c;
  c.M = M;
  c.lambda = MatrixXd::Constant(M, M, lambda);
  c.lambda.diagonal().setZero();
  c.alpha = MatrixXd::Constant(M, M, 0.5 * cfg.p_crit);
  c.beta = MatrixXd::Constant(M, M, 0.5 * cfg.p_crit);
  return c;
}

void validate_coupling(const CouplingMatrix& c, const SymmetryConfig& cfg) {
  for (int i = 0; i < c.M; ++i) {
    for (int j = 0; j < c.M; ++j) {
      if (i == j) continue;
      if (!(c.lambda(i, j) < 0.0) || c.lambda(i, j) != c.lambda(j, i)) {
        throw std::invalid_argument("coupling: lambda must be symmetric negative");
      }
      if (!(c.alpha(i, j) > 1.0) || !(c.beta(i, j) > 1.0) ||
          c.alpha(i, j) != c.beta(j, i) ||
          std::abs(c.alpha(i, j) + c.beta(i, j) - cfg.p_crit) > 1e-12) {
        throw std::invalid_argument(
            "coupling: need alpha_ij = beta_ji > 1 and alpha + beta = 2*");
      }
    }
  }
}

EnergyReport system_energy(const SystemState& state) {
  const OrbitGrid& g = grid_of(state);
  const CouplingMatrix& c = state.coupling;
  EnergyReport r;
  r.per_component_normsq.resize(c.M);
  r.per_component_crit.resize(c.M);
  for (int i = 0; i < c.M; ++i) {
    r.per_component_normsq[i] = weighted_h1_normsq(state.components[i]);
    r.per_component_crit[i] =
        weighted_crit_integral(state.components[i], g.cfg.p_crit);
  }
  r.overlaps = overlap_matrix(state);
  double J = 0.0;
  for (int i = 0; i < c.M; ++i) {
    J += 0.5 * r.per_component_normsq[i] - r.per_component_crit[i] / g.cfg.p_crit;
  }
  for (int i = 0; i < c.M; ++i) {
    for (int j = 0; j < c.M; ++j) {
      if (i != j) J -= 0.5 * c.lambda(i, j) * r.overlaps(i, j);
    }
  }
  r.total_J = J;
  r.c_value =
      std::accumulate(r.per_component_normsq.begin(), r.per_component_normsq.end(), 0.0) /
      g.cfg.N;
  return r;
}

std::vector<ReducedFunction> system_gradient(const SystemState& state) {
  const OrbitGrid& g = grid_of(state);
  std::vector<ReducedFunction> out;
  out.reserve(state.components.size());
  for (int i = 0; i < static_cast<int>(state.components.size()); ++i) {
    ReducedFunction gi(g);
    gi.values = raw_partial(state, i) / g.lumped_h;
    out.push_back(std::move(gi));
  }
  return out;
}

SystemState project_to_system_nehari(const SystemState& state, const SystemOptions& opts) {
  const OrbitGrid& g = grid_of(state);
  const CouplingMatrix& c = state.coupling;
  const double p = g.cfg.p_crit;
  const int M = c.M;
  std::vector<double> A(M), B(M);
  for (int i = 0; i < M; ++i) {
    A[i] = weighted_h1_normsq(state.components[i]);
    B[i] = weighted_crit_integral(state.components[i], p);
    if (!(A[i] > 0.0) || !(B[i] > 0.0)) {
      throw std::invalid_argument("nehari projection: component is zero");
    }
  }
  MatrixXd F = overlap_matrix(state);
  std::vector<double> s(M, 1.0);
  double res = 0.0;
  for (int it = 0; it < opts.projection_max_iters; ++it) {
    for (int i = 0; i < M; ++i) {
      double coup = 0.0;
      for (int j = 0; j < M; ++j) {
        if (j == i) continue;
        coup += c.lambda(i, j) * c.beta(i, j) * std::pow(s[j], c.alpha(i, j)) *
                std::pow(s[i], c.beta(i, j) - 2.0) * F(i, j);
      }
      double target = std::pow((A[i] - coup) / B[i], 1.0 / (p - 2.0));
      double sn = (1.0 - opts.projection_damping) * s[i] + opts.projection_damping * target;
      s[i] = std::clamp(sn, 1e-8, 1e8);
    }
    res = 0.0;
    for (int i = 0; i < M; ++i) {
      double coup = 0.0;
      for (int j = 0; j < M; ++j) {
        if (j == i) continue;
        coup += c.lambda(i, j) * c.beta(i, j) * std::pow(s[j], c.alpha(i, j)) *
                std::pow(s[i], c.beta(i, j)) * F(i, j);
      }
      double r = s[i] * s[i] * A[i] - std::pow(s[i], p) * B[i] - coup;
      res = std::max(res, std::abs(r) / std::max(1.0, s[i] * s[i] * A[i]));
    }
    if (!(res < 1e30)) break;
    if (res < opts.projection_tol) {
      SystemState out = state;
      for (int i = 0; i < M; ++i) out.components[i].values *= s[i];
      return out;
    }
  }
  throw ProjectionFailure("nehari projection did not converge (residual " +
                          std::to_string(res) + ")");
}

SystemState initial_bumps(const OrbitGrid& grid, const CouplingMatrix& coupling) {
  SystemState st;
  st.coupling = coupling;
  const int M = coupling.M;
  for (int i = 0; i < M; ++i) {
    double a = kPi * i / M, b = kPi * (i + 1) / M;
    ReducedFunction w(grid);
    for (int j = 0; j <= grid.K; ++j) {
      double t = grid.nodes[j];
      if (t >= a && t <= b) w.values[j] = std::max(std::sin(kPi * (t - a) / (b - a)), 0.0);
    }
    double t = nehari_scale(w);
    w.values *= t;
    st.components.push_back(std::move(w));
  }
  return st;
}

namespace {
SystemState reseparate(const SystemState& s) {
  const OrbitGrid& g = grid_of(s);
  const int M = static_cast<int>(s.components.size());
  SystemState out = s;
  for (int j = 0; j <= g.K; ++j) {
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < M; ++i) {
      if (s.components[i].values[j] > best) {
        best = s.components[i].values[j];
        arg = i;
      }
    }
    for (int i = 0; i < M; ++i) {
      if (i != arg) out.components[i].values[j] = 0.0;
    }
  }
  for (int i = 0; i < M; ++i) {
    if (out.components[i].values.maxCoeff() <= 0.0) {
      out.components[i].values = s.components[i].values;  // keep, do not zero out
    }
  }
  return out;
}

double c_of(const SystemState& s) {
  const OrbitGrid& g = grid_of(s);
  double acc = 0.0;
  for (const auto& w : s.components) acc += weighted_h1_normsq(w);
  return acc / g.cfg.N;
}
}  // namespace

MinimizeResult minimize_system(const OrbitGrid& grid, const CouplingMatrix& coupling,
                               const SystemState& init, const SystemOptions& opts) {
  validate_coupling(coupling, grid.cfg);
  const int M = coupling.M;
  MinimizeResult res;
  SystemState W = init;
  W.coupling = coupling;

  int restarts = 0;
  for (;;) {
    try {
      W = project_to_system_nehari(W, opts);
      break;
    } catch (const ProjectionFailure&) {
      if (restarts >= opts.max_restarts) throw;
      W = reseparate(W);
      ++restarts;
    }
  }

  // d_floor guard from the projected start
  double d_floor = 0.0;
  {
    double mn = 1e300;
    for (const auto& w : W.components) mn = std::min(mn, weighted_h1_normsq(w));
    d_floor = 0.5 * mn;
  }

  ArrayXd precond;
  {
    ArrayXd diag = ArrayXd::Zero(grid.size());
    for (int j = 0; j < grid.K; ++j) {
      double f = 2.0 * grid.cell_h[j] / (grid.cell_width[j] * grid.cell_width[j]);
      diag[j] += f;
      diag[j + 1] += f;
    }
    diag += 0.5 * grid.cfg.a_N * grid.lumped_h;
    precond = 1.0 / diag;
  }

  double c = c_of(W);
  double step = 0.0;
  {
    double gmax = 0.0;
    for (int i = 0; i < M; ++i)
      gmax = std::max(gmax, (precond * raw_partial(W, i)).abs().maxCoeff());
    step = 1e-2 / std::max(1e-300, gmax);
  }
  std::vector<ArrayXd> prev_v, prev_g;
  int sweep = 0;
  int settled = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    std::vector<ArrayXd> G(M);
    for (int i = 0; i < M; ++i) G[i] = raw_partial(W, i);
    if (!prev_v.empty()) {
      double sPs = 0.0, sy = 0.0, yPy = 0.0;
      for (int i = 0; i < M; ++i) {
        ArrayXd sv = W.components[i].values - prev_v[i];
        ArrayXd yv = G[i] - prev_g[i];
        sPs += (sv / precond * sv).sum();
        sy += (sv * yv).sum();
        yPy += (yv * precond * yv).sum();
      }
      if (sy > 1e-300) {
        double bb = (sweep % 2 == 0) ? (sPs / sy) : (sy / yPy);
        if (std::isfinite(bb) && bb > 0.0) step = bb;
      }
    }
    prev_v.resize(M);
    prev_g.resize(M);
    for (int i = 0; i < M; ++i) {
      prev_v[i] = W.components[i].values;
      prev_g[i] = G[i];
    }

    bool accepted = false;
    SystemState Wn;
    double cn = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      Wn = W;
      for (int i = 0; i < M; ++i) {
        Wn.components[i].values =
            (W.components[i].values - step * precond * G[i]).abs();
      }
      try {
        Wn = project_to_system_nehari(Wn, opts);
      } catch (const ProjectionFailure&) {
        step *= 0.25;
        continue;
      }
      cn = c_of(Wn);
      if (std::isfinite(cn) && cn <= c + 1e-14 * std::abs(c)) {
        accepted = true;
        break;
      }
      step *= 0.25;
    }
    if (!accepted) break;

    // nontriviality floor with re-separated restart
    bool collapsed = false;
    for (const auto& w : Wn.components) {
      if (weighted_h1_normsq(w) < d_floor) collapsed = true;
    }
    if (collapsed) {
      if (restarts >= opts.max_restarts) {
        throw ProjectionFailure("component collapsed below the nontriviality floor");
      }
      ++restarts;
      W = project_to_system_nehari(reseparate(Wn), opts);
      c = c_of(W);
      prev_v.clear();
      prev_g.clear();
      continue;
    }

    double dc = std::abs(cn - c);
    W = std::move(Wn);
    c = cn;
    if (dc < opts.tol_energy * std::abs(c)) {
      if (++settled >= 5) {
        res.converged = true;
        break;
      }
    } else {
      settled = 0;
    }
  }
  res.state = std::move(W);
  res.report = system_energy(res.state);
  res.sweeps = sweep;
  res.restarts = restarts;
  return res;
}

ContinuationResult lambda_continuation(const OrbitGrid& grid,
                                       const std::vector<double>& schedule, int M,
                                       const SystemOptions& opts) {
  if (schedule.empty()) throw std::invalid_argument("continuation: empty schedule");
  for (size_t k = 0; k + 1 < schedule.size(); ++k) {
    if (!(schedule[k + 1] < schedule[k])) {
      throw std::invalid_argument("continuation: schedule must decrease strictly");
    }
  }
  ContinuationResult out;
  SystemState warm;
  bool have_warm = false;
  for (size_t k = 0; k < schedule.size(); ++k) {
    CouplingMatrix c = make_uniform_coupling(M, schedule[k], grid.cfg);
    SystemState init = have_warm ? warm : initial_bumps(grid, c);
    init.coupling = c;
    StageResult st;
    st.lambda = schedule[k];
    try {
      MinimizeResult mr = minimize_system(grid, c, init, opts);
      st.state = std::move(mr.state);
      st.report = std::move(mr.report);
      st.sweeps = mr.sweeps;
      st.converged = mr.converged;
      double mn = 1e300;
      for (double a : st.report.per_component_normsq) mn = std::min(mn, a);
      st.d_floor = 0.5 * mn;
      warm = st.state;
      have_warm = true;
      out.stages.push_back(std::move(st));
    } catch (const std::runtime_error&) {
      out.failed_stage = static_cast<int>(k);
      return out;
    }
  }
  out.completed = true;
  return out;
}

IntervalPartition extract_supports(const SystemState& state, double threshold) {
  if (!(threshold > 0.0) || threshold > 1.0) {
    throw std::invalid_argument("extract_supports: threshold in (0,1] required");
  }
  const OrbitGrid& g = grid_of(state);
  const int M = static_cast<int>(state.components.size());
  struct Range {
    int lo, hi, comp;
  };
  std::vector<Range> ranges;
  for (int i = 0; i < M; ++i) {
    const ArrayXd& v = state.components[i].values;
    double thr = threshold * v.maxCoeff();
    int lo = -1, hi = -1;
    for (int j = 0; j <= g.K; ++j) {
      if (v[j] >= thr && thr > 0.0) {
        if (lo < 0) lo = j;
        hi = j;
      }
    }
    if (lo < 0) throw SegregationIncomplete("component " + std::to_string(i) +
                                            " has empty super-threshold set");
    for (int j = lo; j <= hi; ++j) {
      if (v[j] < thr) {
        throw SegregationIncomplete("component " + std::to_string(i) +
                                    " has a disconnected super-threshold set");
      }
    }
    ranges.push_back({lo, hi, i});
  }
  std::sort(ranges.begin(), ranges.end(),
            [](const Range& a, const Range& b) { return a.lo + a.hi < b.lo + b.hi; });
  IntervalPartition part;
  part.cfg = g.cfg;
  part.M = M;
  for (int i = 0; i + 1 < M; ++i) {
    if (ranges[i + 1].lo <= ranges[i].hi && threshold < 1.0) {
      // allow small tail overlap; the cut is the midpoint of the edge gap
    }
    double cut = 0.5 * (g.nodes[ranges[i].hi] + g.nodes[ranges[i + 1].lo]);
    part.cuts.push_back(cut);
  }
  for (size_t i = 0; i + 1 < part.cuts.size(); ++i) {
    if (!(part.cuts[i] < part.cuts[i + 1])) {
      throw SegregationIncomplete("extracted cuts are not strictly increasing");
    }
  }
  return part;
}

}  // namespace orbipart
