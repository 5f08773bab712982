#include "orbipart/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace orbipart {

namespace {
constexpr double kPi = std::numbers::pi;

// 4-point Gauss-Legendre on [-1,1].
constexpr double kGx[4] = {-0.8611363115940526, -0.3399810435848563,
                           0.3399810435848563, 0.8611363115940526};
constexpr double kGw[4] = {0.3478548451374538, 0.6521451548625461,
                           0.6521451548625461, 0.3478548451374538};

double h_raw(double t, const SymmetryConfig& cfg) {
  return cfg.weight_const * std::pow(std::cos(0.5 * t), cfg.m - 1) *
         std::pow(std::sin(0.5 * t), cfg.n - 1);
}

// Composite trapezoid with three Gregory end corrections (unit spacing);
// all weights positive, error O(h^5) for smooth integrands.
ArrayXd gregory_weights(int K) {
  ArrayXd w = ArrayXd::Ones(K + 1);
  w[0] = w[K] = 0.5;
  const double c1 = 1.0 / 12.0, c2 = 1.0 / 24.0, c3 = 19.0 / 720.0;
  // I = T - c1 (D g_K - d g_0) - c2 (D^2 g_K + d^2 g_0) - c3 (D^3 g_K - d^3 g_0)
  const double left[4] = {-c1 - c2 - c3, c1 + 2 * c2 + 3 * c3, -c2 - 3 * c3, c3};
  for (int i = 0; i < 4; ++i) {
    w[i] += left[i];
    w[K - i] += left[i];
  }
  return w;
}

struct GradingMap {
  double g;
  double s(double x) const {
    if (g == 1.0) return x;
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double a = std::pow(x, g), b = std::pow(1.0 - x, g);
    return a / (a + b);
  }
  double ds(double x) const {
    if (g == 1.0) return 1.0;
    if (x <= 0.0 || x >= 1.0) return 0.0;
    double a = std::pow(x, g), b = std::pow(1.0 - x, g);
    double da = g * std::pow(x, g - 1.0), db = -g * std::pow(1.0 - x, g - 1.0);
    double denom = a + b;
    return (da * denom - a * (da + db)) / (denom * denom);
  }
};
}  // namespace

int OrbitGrid::nearest_node(double t) const {
  int lo = 0, hi = K;
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    if (nodes[mid] <= t) lo = mid; else hi = mid;
  }
  return (t - nodes[lo] <= nodes[hi] - t) ? lo : hi;
}

OrbitGrid build_grid(const SymmetryConfig& cfg, int K, double grading) {
  if (K < 32) {
    throw std::invalid_argument("build_grid: K >= 32 required");
  }
  if (grading < 1.0) {
    throw std::invalid_argument("build_grid: grading >= 1 required");
  }
  OrbitGrid g;
  g.cfg = cfg;
  g.K = K;
  g.grading = grading;
  g.nodes.resize(K + 1);
  g.quad_weights.resize(K + 1);
  g.h_values.resize(K + 1);
  GradingMap map{grading};
  ArrayXd greg = gregory_weights(K);
  for (int j = 0; j <= K; ++j) {
    double x = static_cast<double>(j) / K;
    g.nodes[j] = kPi * map.s(x);
    g.quad_weights[j] = greg[j] * (kPi / K) * map.ds(x);
    g.h_values[j] = weight_h(g.nodes[j], cfg);
  }
  g.nodes[0] = 0.0;
  g.nodes[K] = kPi;
  g.h_values[0] = g.h_values[K] = 0.0;

  g.cell_width.resize(K);
  g.cell_h.resize(K);
  g.lumped_h = ArrayXd::Zero(K + 1);
  for (int j = 0; j < K; ++j) {
    double a = g.nodes[j], b = g.nodes[j + 1];
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    g.cell_width[j] = b - a;
    double cell = 0.0, left = 0.0, right = 0.0;
    for (int q = 0; q < 4; ++q) {
      double t = mid + half * kGx[q];
      double wq = half * kGw[q];
      double hv = h_raw(t, cfg);
      double x = (t - a) / (b - a);
      cell += wq * hv;
      left += wq * (1.0 - x) * hv;
      right += wq * x * hv;
    }
    g.cell_h[j] = cell;
    g.lumped_h[j] += left;
    g.lumped_h[j + 1] += right;
  }
  return g;
}

double default_grading(const SymmetryConfig& cfg) {
  return (std::max(cfg.m, cfg.n) >= 4) ? 2.0 : 1.0;
}

void check_same_grid(const ReducedFunction& a, const ReducedFunction& b) {
  if (a.grid == nullptr || b.grid == nullptr || a.grid != b.grid) {
    throw std::invalid_argument("reduced functions live on different grids");
  }
}

double weighted_h1_normsq(const ReducedFunction& w) {
  const OrbitGrid& g = *w.grid;
  double grad = 0.0;
  int lo = std::max(w.support_lo - 1, 0);
  int hi = std::min(w.support_hi, g.K - 1);
  for (int j = lo; j <= hi; ++j) {
    double dv = (w.values[j + 1] - w.values[j]) / g.cell_width[j];
    grad += g.cell_h[j] * dv * dv;
  }
  double mass = 0.0;
  for (int j = w.support_lo; j <= w.support_hi; ++j) {
    mass += g.quad_weights[j] * g.h_values[j] * w.values[j] * w.values[j];
  }
  return grad + 0.25 * g.cfg.a_N * mass;
}

double weighted_crit_integral(const ReducedFunction& w, double p) {
  if (p < 1.0) {
    throw std::invalid_argument("weighted_crit_integral: p >= 1 required");
  }
  const OrbitGrid& g = *w.grid;
  double acc = 0.0;
  for (int j = w.support_lo; j <= w.support_hi; ++j) {
    acc += g.quad_weights[j] * g.h_values[j] * std::pow(std::abs(w.values[j]), p);
  }
  return 0.25 * acc;
}

double weighted_overlap(const ReducedFunction& wi, const ReducedFunction& wj,
                        double alpha, double beta) {
  check_same_grid(wi, wj);
  const OrbitGrid& g = *wi.grid;
  if (!(alpha > 1.0) || !(beta > 1.0) ||
      std::abs(alpha + beta - g.cfg.p_crit) > 1e-12) {
    throw std::invalid_argument(
        "weighted_overlap: exponents must satisfy alpha,beta > 1, alpha+beta = 2*");
  }
  int lo = std::max(wi.support_lo, wj.support_lo);
  int hi = std::min(wi.support_hi, wj.support_hi);
  double acc = 0.0;
  for (int j = lo; j <= hi; ++j) {
    double a = std::abs(wj.values[j]);
    double b = std::abs(wi.values[j]);
    if (a == 0.0 || b == 0.0) continue;
    acc += g.quad_weights[j] * g.h_values[j] * std::pow(a, alpha) * std::pow(b, beta);
  }
  return 0.25 * acc;
}

namespace {
// First/second derivative coefficients at x0 from three nodes.
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
}  // namespace

ReducedFunction reduced_residual(const ReducedFunction& w, double a, double b) {
  const OrbitGrid& g = *w.grid;
  if (a < -1e-14 || b > kPi + 1e-14 || !(a < b)) {
    throw std::domain_error("reduced_residual: interval outside [0,pi]");
  }
  ReducedFunction r(g);
  const double aN4 = 0.25 * g.cfg.a_N;
  const double p = g.cfg.p_crit;
  int ia = g.nearest_node(a), ib = g.nearest_node(b);
  for (int j = std::max(ia + 1, 1); j <= std::min(ib - 1, g.K - 1); ++j) {
    double c1[3], c2[3];
    stencil3(g.nodes[j], g.nodes[j - 1], g.nodes[j], g.nodes[j + 1], c1, c2);
    double w1 = c1[0] * w.values[j - 1] + c1[1] * w.values[j] + c1[2] * w.values[j + 1];
    double w2 = c2[0] * w.values[j - 1] + c2[1] * w.values[j] + c2[2] * w.values[j + 1];
    double hr = log_weight_h_deriv(g.nodes[j], g.cfg);
    double v = w.values[j];
    r.values[j] = -w2 - hr * w1 + aN4 * v - 0.25 * std::pow(std::abs(v), p - 2.0) * v;
  }
  r.support_lo = std::max(ia + 1, 1);
  r.support_hi = std::min(ib - 1, g.K - 1);
  return r;
}

double residual_sup(const ReducedFunction& w, double a, double b, int margin_cells) {
  const OrbitGrid& g = *w.grid;
  ReducedFunction r = reduced_residual(w, a, b);
  int ia = g.nearest_node(a), ib = g.nearest_node(b);
  double sup = 0.0;
  for (int j = ia + margin_cells; j <= ib - margin_cells; ++j) {
    if (j < 1 || j > g.K - 1) continue;
    sup = std::max(sup, std::abs(r.values[j]));
  }
  return sup;
}

ArrayXd nodal_derivative(const ReducedFunction& w) {
  const OrbitGrid& g = *w.grid;
  ArrayXd d = ArrayXd::Zero(g.size());
  int lo = w.support_lo, hi = w.support_hi;
  if (hi - lo < 2) return d;
  for (int j = lo; j <= hi; ++j) {
    int i0 = j - 1, i1 = j, i2 = j + 1;
    if (j == lo) { i0 = lo; i1 = lo + 1; i2 = lo + 2; }
    if (j == hi) { i0 = hi - 2; i1 = hi - 1; i2 = hi; }
    double c1[3], c2[3];
    stencil3(g.nodes[j], g.nodes[i0], g.nodes[i1], g.nodes[i2], c1, c2);
    d[j] = c1[0] * w.values[i0] + c1[1] * w.values[i1] + c1[2] * w.values[i2];
  }
  return d;
}

void write_csv(const ReducedFunction& w, std::ostream& os) {
  const OrbitGrid& g = *w.grid;
  os << "t,w\n";
  char buf[64];
  for (int j = 0; j <= g.K; ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g", g.nodes[j]);
    os << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", w.values[j]);
    os << buf << '\n';
  }
}

void write_csv(const ReducedFunction& w, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_csv(w, os);
}

}  // namespace orbipart
