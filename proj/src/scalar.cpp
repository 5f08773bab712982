#include "orbipart/scalar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace orbipart {

namespace {
constexpr double kPi = std::numbers::pi;

double pow_abs(double w, double e) { return std::pow(std::abs(w), e); }

// f(w) = (a_N/4) w - (1/4)|w|^{2*-2} w and its derivative.
struct Nonlinearity {
  double aN4, p;
  double f(double w) const { return aN4 * w - 0.25 * pow_abs(w, p - 2.0) * w; }
  double df(double w) const { return aN4 - 0.25 * (p - 1.0) * pow_abs(w, p - 2.0); }
};

// Interval functional on the DOF range [lo,hi] (nodes outside are pinned 0).
struct IntervalProblem {
  const OrbitGrid& g;
  int ia, ib;    // support node range
  int lo, hi;    // unknown node range
  ArrayXd precond;  // Jacobi diagonal of the quadratic part
  ArrayXd pairing;  // positive nodal mass for BB metrics

  IntervalProblem(const OrbitGrid& grid, int ia_, int ib_) : g(grid), ia(ia_), ib(ib_) {
    lo = (ia == 0) ? 0 : ia + 1;
    hi = (ib == g.K) ? g.K : ib - 1;
    ArrayXd diag = ArrayXd::Zero(g.size());
    for (int j = std::max(ia - 1, 0); j <= std::min(ib, g.K - 1); ++j) {
      double f = 2.0 * g.cell_h[j] / (g.cell_width[j] * g.cell_width[j]);
      diag[j] += f;
      diag[j + 1] += f;
    }
    diag += 0.5 * g.cfg.a_N * g.lumped_h;
    precond = 1.0 / diag;
    pairing = g.lumped_h;
  }

  ReducedFunction make(const ArrayXd& vals) const {
    return ReducedFunction(g, vals, ia, ib);
  }

  double normsq(const ArrayXd& v) const {
    double grad = 0.0;
    for (int j = std::max(ia - 1, 0); j <= std::min(ib, g.K - 1); ++j) {
      double dv = (v[j + 1] - v[j]) / g.cell_width[j];
      grad += g.cell_h[j] * dv * dv;
    }
    double mass = 0.0;
    for (int j = ia; j <= ib; ++j)
      mass += g.quad_weights[j] * g.h_values[j] * v[j] * v[j];
    return grad + 0.25 * g.cfg.a_N * mass;
  }

  double crit(const ArrayXd& v) const {
    double acc = 0.0;
    for (int j = ia; j <= ib; ++j)
      acc += g.quad_weights[j] * g.h_values[j] * pow_abs(v[j], g.cfg.p_crit);
    return 0.25 * acc;
  }

  ArrayXd grad_normsq(const ArrayXd& v) const {
    ArrayXd out = 0.5 * g.cfg.a_N * g.quad_weights * g.h_values * v;
    for (int j = std::max(ia - 1, 0); j <= std::min(ib, g.K - 1); ++j) {
      double f = 2.0 * g.cell_h[j] * (v[j + 1] - v[j]) /
                 (g.cell_width[j] * g.cell_width[j]);
      out[j] -= f;
      out[j + 1] += f;
    }
    return out;
  }

  ArrayXd grad_crit(const ArrayXd& v) const {
    double p = g.cfg.p_crit;
    ArrayXd out(g.size());
    for (int j = 0; j < g.size(); ++j)
      out[j] = 0.25 * p * g.quad_weights[j] * g.h_values[j] *
               pow_abs(v[j], p - 2.0) * v[j];
    return out;
  }

  void mask(ArrayXd& v) const {
    for (int j = 0; j < lo; ++j) v[j] = 0.0;
    for (int j = hi + 1; j < g.size(); ++j) v[j] = 0.0;
  }
};

// Rayleigh quotient Q = ||w||^2 / crit(w)^{2/2*}, minimized over the cone of
// nonnegative masked profiles with preconditioned BB steps.
struct DescentResult {
  ArrayXd v;
  int iterations = 0;
  bool converged = false;
};

DescentResult rayleigh_descent(const IntervalProblem& P, ArrayXd v,
                               const SolverOptions& opts) {
  const double p = P.g.cfg.p_crit;
  auto Q = [&](const ArrayXd& x) { return P.normsq(x) / std::pow(P.crit(x), 2.0 / p); };
  auto gradQ = [&](const ArrayXd& x) {
    double A = P.normsq(x), B = P.crit(x);
    ArrayXd gr = (P.grad_normsq(x) - (2.0 / p) * (A / B) * P.grad_crit(x)) /
                 std::pow(B, 2.0 / p);
    P.mask(gr);
    return gr;
  };
  P.mask(v);
  double q = Q(v);
  ArrayXd gr = gradQ(v);
  ArrayXd d = P.precond * gr;
  P.mask(d);
  double step = 0.1 / std::max(1e-300, d.abs().maxCoeff());
  int stagnant = 0;
  DescentResult res;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    ArrayXd vn;
    double qn = 0.0;
    bool ok = false;
    for (int bt = 0; bt < 60; ++bt) {
      vn = (v - step * d).abs();
      P.mask(vn);
      qn = Q(vn);
      if (qn <= q) { ok = true; break; }
      step *= 0.25;
    }
    if (!ok) break;
    ArrayXd grn = gradQ(vn);
    ArrayXd sv = vn - v, yv = grn - gr;
    double sPs = (sv / P.precond * sv).sum();
    double sy = (sv * yv).sum();
    double yPy = (yv * P.precond * yv).sum();
    double dq = q - qn;
    v = std::move(vn);
    q = qn;
    gr = std::move(grn);
    d = P.precond * gr;
    P.mask(d);
    if (sy > 1e-300) {
      step = (it % 2 == 0) ? (sPs / sy) : (sy / yPy);
    } else {
      step *= 1.5;
    }
    double gsup = (gr / P.pairing).abs().maxCoeff();
    if (gsup < opts.tol_grad * std::max(1.0, q)) {
      res.converged = true;
      break;
    }
    if (dq < opts.tol_energy * 1e-3 * std::abs(q)) {
      if (++stagnant > 50) { res.converged = true; break; }
    } else {
      stagnant = 0;
    }
  }
  res.v = std::move(v);
  res.iterations = it;
  return res;
}

// Strong-form collocation polish. Unknowns are the DOF nodes; interior rows
// are the centered residual, endpoint rows (only when the interval reaches
// 0 or pi) the regular-singular limit -dim * w'' + f(w) = 0. The Jacobian is
// tridiagonal apart from the end rows, solved by a Schur complement on the
// two border unknowns.
struct PolishResult {
  bool ok = false;
  int iterations = 0;
};

void stencil3(double x0, double t0, double t1, double t2, double c1[3], double c2[3]) {
  double d0 = x0 - t0, d1 = x0 - t1, d2 = x0 - t2;
  double n01 = t0 - t1, n02 = t0 - t2, n12 = t1 - t2;
  c1[0] = (d1 + d2) / (n01 * n02);
  c1[1] = (d0 + d2) / (-n01 * n12);
  c1[2] = (d0 + d1) / (n02 * n12);
  c2[0] = 2.0 / (n01 * n02);
  c2[1] = 2.0 / (-n01 * n12);
  c2[2] = 2.0 / (n02 * n12);
}

// Second-derivative weights at x0 from four nodes (one-sided, second order).
void stencil4_d2(double x0, const double t[4], double c2[4]) {
  // Differentiate the cubic Lagrange interpolant twice at x0.
  for (int i = 0; i < 4; ++i) {
    double denom = 1.0;
    for (int k = 0; k < 4; ++k)
      if (k != i) denom *= t[i] - t[k];
    // second derivative of prod_{k!=i}(x-t_k) at x0: 2 * sum over pairs
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
      if (a == i) continue;
      for (int b = a + 1; b < 4; ++b) {
        if (b == i) continue;
        double prod = 1.0;
        for (int k = 0; k < 4; ++k)
          if (k != i && k != a && k != b) prod *= x0 - t[k];
        acc += 2.0 * prod;
      }
    }
    c2[i] = acc / denom;
  }
}

void thomas_solve(std::vector<double>& dl, std::vector<double>& dd,
                  std::vector<double>& du, std::vector<double>& rhs) {
  int n = static_cast<int>(dd.size());
  for (int i = 1; i < n; ++i) {
    double m = dl[i] / dd[i - 1];
    dd[i] -= m * du[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= dd[n - 1];
  for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - du[i] * rhs[i + 1]) / dd[i];
}

PolishResult newton_polish(const IntervalProblem& P, ArrayXd& v,
                           const SolverOptions& opts) {
  const OrbitGrid& g = P.g;
  const Nonlinearity nl{0.25 * g.cfg.a_N, g.cfg.p_crit};
  const int lo = P.lo, hi = P.hi;
  const int n = hi - lo + 1;
  if (n < 5) return {};
  const bool left_free = (lo == 0), right_free = (hi == g.K);

  auto assemble_F = [&](const ArrayXd& x, std::vector<double>& F) {
    F.assign(n, 0.0);
    for (int j = lo; j <= hi; ++j) {
      int q = j - lo;
      if (j == 0) {
        double ts[4] = {g.nodes[0], g.nodes[1], g.nodes[2], g.nodes[3]};
        double c2[4];
        stencil4_d2(g.nodes[0], ts, c2);
        double w2 = c2[0] * x[0] + c2[1] * x[1] + c2[2] * x[2] + c2[3] * x[3];
        F[q] = -g.cfg.n * w2 + nl.f(x[0]);
      } else if (j == g.K) {
        double ts[4] = {g.nodes[g.K - 3], g.nodes[g.K - 2], g.nodes[g.K - 1], g.nodes[g.K]};
        double c2[4];
        stencil4_d2(g.nodes[g.K], ts, c2);
        double w2 = c2[0] * x[g.K - 3] + c2[1] * x[g.K - 2] + c2[2] * x[g.K - 1] +
                    c2[3] * x[g.K];
        F[q] = -g.cfg.m * w2 + nl.f(x[g.K]);
      } else {
        double c1[3], c2[3];
        stencil3(g.nodes[j], g.nodes[j - 1], g.nodes[j], g.nodes[j + 1], c1, c2);
        double w1 = c1[0] * x[j - 1] + c1[1] * x[j] + c1[2] * x[j + 1];
        double w2 = c2[0] * x[j - 1] + c2[1] * x[j] + c2[2] * x[j + 1];
        double hr = log_weight_h_deriv(g.nodes[j], g.cfg);
        F[q] = -w2 - hr * w1 + nl.f(x[j]);
      }
    }
  };

  std::vector<double> F, dl, dd, du;
  std::vector<double> r0, r1, rK0, rK1;  // end-row coefficients
  assemble_F(v, F);
  double fn = 0.0;
  for (double f : F) fn = std::max(fn, std::abs(f));
  double scale = std::max(1.0, v.abs().maxCoeff());
  PolishResult res;
  for (int itn = 0; itn < opts.newton_max_iters; ++itn) {
    if (fn < 1e-11 * std::max(1.0, nl.aN4 * scale)) {
      res.ok = true;
      res.iterations = itn;
      break;
    }
    // Tridiagonal part over interior unknowns, border rows kept separate.
    int ilo = left_free ? 1 : lo;       // first interior-row node
    int ihi = right_free ? g.K - 1 : hi;
    int ni = ihi - ilo + 1;
    dl.assign(ni, 0.0);
    dd.assign(ni, 0.0);
    du.assign(ni, 0.0);
    std::vector<double> rhs(ni), colL(ni, 0.0), colR(ni, 0.0);
    for (int j = ilo; j <= ihi; ++j) {
      double c1[3], c2[3];
      stencil3(g.nodes[j], g.nodes[j - 1], g.nodes[j], g.nodes[j + 1], c1, c2);
      double hr = log_weight_h_deriv(g.nodes[j], g.cfg);
      double jm = -c2[0] - hr * c1[0];
      double jc = -c2[1] - hr * c1[1] + nl.df(v[j]);
      double jp = -c2[2] - hr * c1[2];
      int q = j - ilo;
      dd[q] = jc;
      rhs[q] = -F[j - lo];
      if (j - 1 >= ilo) dl[q] = jm;
      else if (left_free && j - 1 == 0) colL[q] = jm;
      if (j + 1 <= ihi) du[q] = jp;
      else if (right_free && j + 1 == g.K) colR[q] = jp;
    }
    // end-row coefficients
    double e0[4] = {0, 0, 0, 0}, eK[4] = {0, 0, 0, 0};
    if (left_free) {
      double ts[4] = {g.nodes[0], g.nodes[1], g.nodes[2], g.nodes[3]};
      double c2[4];
      stencil4_d2(g.nodes[0], ts, c2);
      for (int i = 0; i < 4; ++i) e0[i] = -g.cfg.n * c2[i];
      e0[0] += nl.df(v[0]);
    }
    if (right_free) {
      double ts[4] = {g.nodes[g.K - 3], g.nodes[g.K - 2], g.nodes[g.K - 1], g.nodes[g.K]};
      double c2[4];
      stencil4_d2(g.nodes[g.K], ts, c2);
      for (int i = 0; i < 4; ++i) eK[i] = -g.cfg.m * c2[i];
      eK[3] += nl.df(v[g.K]);
    }
    // Solve: x_inner = T^{-1}(rhs - xL*colL - xR*colR), then the border rows.
    std::vector<double> sb = rhs, sL = colL, sR = colR;
    {
      auto a = dl, b = dd, c = du;
      thomas_solve(a, b, c, sb);
    }
    double xL = 0.0, xR = 0.0;
    if (left_free || right_free) {
      if (left_free) {
        auto a = dl, b = dd, c = du;
        thomas_solve(a, b, c, sL);
      }
      if (right_free) {
        auto a = dl, b = dd, c = du;
        thomas_solve(a, b, c, sR);
      }
      // Border equations: rows at node 0 and node K.
      // Row0: e0[0] xL + sum_{i=1..3} e0[i] x_{node i} = -F0
      // with x_{node i} = sb[i-ilo] - xL sL[...] - xR sR[...] for inner nodes.
      double A00 = 1.0, A01 = 0.0, b0 = 0.0, A10 = 0.0, A11 = 1.0, b1 = 0.0;
      // x_i = sb[i] - xL sL[i] - xR sR[i] for inner nodes i
      if (left_free) {
        A00 = e0[0];
        A01 = 0.0;
        b0 = -F[0];
        for (int i = 1; i <= 3; ++i) {
          int q = i - ilo;
          b0 -= e0[i] * sb[q];
          A00 += e0[i] * (-sL[q]);
          A01 += e0[i] * (-sR[q]);
        }
      }
      if (right_free) {
        A11 = eK[3];
        A10 = 0.0;
        b1 = -F[n - 1];
        for (int i = 0; i < 3; ++i) {
          int nodei = g.K - 3 + i;
          int q = nodei - ilo;
          b1 -= eK[i] * sb[q];
          A10 += eK[i] * (-sL[q]);
          A11 += eK[i] * (-sR[q]);
        }
      }
      double det = A00 * A11 - A01 * A10;
      if (std::abs(det) < 1e-300) return {};
      xL = (b0 * A11 - A01 * b1) / det;
      xR = (A00 * b1 - A10 * b0) / det;
    }
    // Damped update.
    ArrayXd dx = ArrayXd::Zero(g.size());
    for (int j = ilo; j <= ihi; ++j) {
      int q = j - ilo;
      dx[j] = sb[q] - xL * sL[q] - xR * sR[q];
    }
    if (left_free) dx[0] = xL;
    if (right_free) dx[g.K] = xR;
    double lambda = 1.0;
    std::vector<double> Ft;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      ArrayXd vt = v + lambda * dx;
      assemble_F(vt, Ft);
      double fnt = 0.0;
      for (double f : Ft) fnt = std::max(fnt, std::abs(f));
      if (fnt < fn) {
        v = std::move(vt);
        F = Ft;
        fn = fnt;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
    res.iterations = itn + 1;
    if (std::getenv("ORBIPART_DEBUG_POLISH")) {
      std::fprintf(stderr, "newton it=%d fn=%.3e lambda=%.3e\n", itn, fn, lambda);
    }
  }
  if (!res.ok) return res;
  // require nonnegativity up to rounding
  double vmax = v.abs().maxCoeff();
  double vmin = v.minCoeff();
  if (vmin < -1e-9 * vmax) {
    res.ok = false;
    return res;
  }
  for (int j = 0; j < g.size(); ++j) v[j] = std::max(v[j], 0.0);
  return res;
}

}  // namespace

double nehari_scale(const ReducedFunction& w) {
  double A = weighted_h1_normsq(w);
  double B = weighted_crit_integral(w, w.grid->cfg.p_crit);
  if (!(A > 0.0) || !(B > 0.0)) {
    throw std::domain_error("nehari_scale: zero function");
  }
  return std::pow(A / B, 1.0 / (w.grid->cfg.p_crit - 2.0));
}

ScalarSolution least_energy_on_interval(const OrbitGrid& grid, double a, double b,
                                        const SolverOptions& opts) {
  if (a < -1e-14 || b > kPi + 1e-14 || !(a < b)) {
    throw std::domain_error("least_energy_on_interval: invalid interval");
  }
  int ia = grid.nearest_node(a), ib = grid.nearest_node(b);
  if (ib - ia < 9) {
    throw std::invalid_argument(
        "least_energy_on_interval: fewer than 8 grid nodes strictly inside");
  }
  IntervalProblem P(grid, ia, ib);

  // positive bump initial guess, then scale-free descent
  ArrayXd v0 = ArrayXd::Zero(grid.size());
  double ta = grid.nodes[ia], tb = grid.nodes[ib];
  for (int j = P.lo; j <= P.hi; ++j) {
    v0[j] = std::sin(kPi * (grid.nodes[j] - ta) / (tb - ta)) + 1e-12;
  }
  DescentResult dr = rayleigh_descent(P, std::move(v0), opts);

  ScalarSolution sol;
  sol.a = grid.nodes[ia];
  sol.b = grid.nodes[ib];
  sol.iterations = dr.iterations;

  ReducedFunction w = P.make(dr.v);
  double t = nehari_scale(w);
  w.values *= t;

  if (opts.polish) {
    ArrayXd vp = w.values;
    PolishResult pr = newton_polish(P, vp, opts);
    if (pr.ok) {
      w.values = std::move(vp);
      sol.polished = true;
    }
  }
  sol.profile = w;
  sol.normsq = weighted_h1_normsq(w);
  sol.crit = weighted_crit_integral(w, grid.cfg.p_crit);
  sol.energy = sol.crit / grid.cfg.N;
  sol.nehari_gap = std::abs(sol.normsq - sol.crit) / sol.normsq;
  sol.residual_sup = residual_sup(w, sol.a, sol.b, 3);
  if (!dr.converged && !sol.polished) {
    throw ConvergenceFailure("least_energy_on_interval: descent did not converge", sol);
  }
  return sol;
}

namespace {
struct OdeState {
  double w, dw;
};

// Right-hand side of w'' = -hr(t) w' + f(w), with the (m,n) roles as given.
OdeState rhs(double t, const OdeState& y, const SymmetryConfig& cfg, const Nonlinearity& nl) {
  double hr = -0.5 * (cfg.m - 1) * std::tan(0.5 * t) +
              0.5 * (cfg.n - 1) / std::tan(0.5 * t);
  return {y.dw, -hr * y.dw + nl.f(y.w)};
}
}  // namespace

ShootResult shoot_reduced_ode(const OrbitGrid& grid, double w0, bool from_left) {
  if (!(w0 >= 0.0)) {
    throw std::domain_error("shoot_reduced_ode: w0 >= 0 required");
  }
  const SymmetryConfig& cfg = grid.cfg;
  SymmetryConfig icfg = cfg;
  if (!from_left) std::swap(icfg.m, icfg.n);  // mirrored coordinate s = pi - t
  const Nonlinearity nl{0.25 * cfg.a_N, cfg.p_crit};
  const int K = grid.K;
  ShootResult out;
  out.trajectory = ReducedFunction(grid);
  ArrayXd traj = ArrayXd::Zero(K + 1);

  // node angles in the integration coordinate (mirrored grid is the same set)
  auto node = [&](int j) { return from_left ? grid.nodes[j] : kPi - grid.nodes[K - j]; };

  traj[0] = w0;
  double g0 = nl.f(w0);
  double t1 = node(1);
  OdeState y{w0 + g0 * t1 * t1 / (2.0 * icfg.n), g0 * t1 / icfg.n};
  traj[1] = y.w;
  std::optional<double> first_zero;
  bool blew = false;
  const double hmax = kPi / 4096.0;
  for (int j = 1; j < K && !blew; ++j) {
    double ta = node(j), tb = node(j + 1);
    int nsub = std::max(1, static_cast<int>(std::ceil((tb - ta) / hmax)));
    double h = (tb - ta) / nsub;
    double t = ta;
    for (int s = 0; s < nsub; ++s) {
      OdeState k1 = rhs(t, y, icfg, nl);
      OdeState y2{y.w + 0.5 * h * k1.w, y.dw + 0.5 * h * k1.dw};
      OdeState k2 = rhs(t + 0.5 * h, y2, icfg, nl);
      OdeState y3{y.w + 0.5 * h * k2.w, y.dw + 0.5 * h * k2.dw};
      OdeState k3 = rhs(t + 0.5 * h, y3, icfg, nl);
      OdeState y4{y.w + h * k3.w, y.dw + h * k3.dw};
      OdeState k4 = rhs(t + h, y4, icfg, nl);
      OdeState yn{y.w + h / 6.0 * (k1.w + 2 * k2.w + 2 * k3.w + k4.w),
                  y.dw + h / 6.0 * (k1.dw + 2 * k2.dw + 2 * k3.dw + k4.dw)};
      if (!first_zero && yn.w <= 0.0 && y.w > 0.0) {
        double frac = y.w / (y.w - yn.w);
        first_zero = t + frac * h;
      }
      y = yn;
      t += h;
      if (std::abs(y.w) > 1e8) {
        blew = true;
        break;
      }
    }
    if (!blew) traj[j + 1] = y.w;
  }
  if (from_left) {
    out.trajectory.values = traj;
    out.first_zero = first_zero;
  } else {
    for (int j = 0; j <= K; ++j) out.trajectory.values[K - j] = traj[j];
    if (first_zero) out.first_zero = kPi - *first_zero;
  }
  out.blew_up = blew;
  return out;
}

double shoot_match_zero(const OrbitGrid& grid, double b_target, double w0_lo, double w0_hi) {
  const double eq = std::pow(grid.cfg.a_N, 1.0 / (grid.cfg.p_crit - 2.0));
  // first zero moves left (smaller b) as w0 grows
  auto zero_of = [&](double w0) -> std::optional<double> {
    ShootResult r = shoot_reduced_ode(grid, w0, true);
    return r.blew_up ? std::nullopt : r.first_zero;
  };
  double lo = (w0_lo > 0.0) ? w0_lo : eq * 1.001;
  double hi = w0_hi;
  if (hi <= lo) {
    hi = eq * 4.0;
    for (int i = 0; i < 24; ++i) {
      auto z = zero_of(hi);
      if (z && *z < b_target) break;
      hi *= 2.0;
    }
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    auto z = zero_of(mid);
    if (!z || *z > b_target) lo = mid;
    else hi = mid;
    if (hi - lo < 1e-14 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace orbipart
