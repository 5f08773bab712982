#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "orbipart/partition.hpp"
#include "orbipart/system.hpp"

using namespace orbipart;
constexpr double kPi = std::numbers::pi;

namespace {
SystemState constant_pair(const OrbitGrid& g, double lambda) {
  SystemState st;
  st.coupling = make_uniform_coupling(2, lambda, g.cfg);
  for (int i = 0; i < 2; ++i) {
    ReducedFunction w(g);
    w.values.setConstant(1.0);
    st.components.push_back(std::move(w));
  }
  return st;
}

SystemState random_state(const OrbitGrid& g, int M, double lambda, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  SystemState st;
  st.coupling = make_uniform_coupling(M, lambda, g.cfg);
  for (int i = 0; i < M; ++i) {
    ReducedFunction w(g);
    double a0 = unif(rng), a1 = unif(rng), a2 = unif(rng), a3 = unif(rng);
    for (int j = 0; j <= g.K; ++j) {
      double t = g.nodes[j];
      w.values[j] = 0.4 + std::abs(a0 + a1 * std::sin(t) + a2 * std::sin(2 * t) +
                                   a3 * std::cos(3 * t));
    }
    st.components.push_back(std::move(w));
  }
  return st;
}
}  // namespace

TEST_CASE("coupling validation") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  CouplingMatrix cm = make_uniform_coupling(3, -2.0, c);
  CHECK(cm.lambda(0, 1) == -2.0);
  CHECK(cm.lambda(1, 1) == 0.0);
  CHECK_NOTHROW(validate_coupling(cm, c));
  cm.lambda(0, 1) = 1.0;
  CHECK_THROWS_AS(validate_coupling(cm, c), std::invalid_argument);
  CHECK_THROWS_AS(make_uniform_coupling(2, 0.5, c), std::invalid_argument);
}

TEST_CASE("system energy: zero state, disjoint supports, constant pair") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 256, 1.0);

  SystemState zero;
  zero.coupling = make_uniform_coupling(2, -1.0, c);
  zero.components.assign(2, ReducedFunction(g));
  EnergyReport rz = system_energy(zero);
  CHECK(rz.total_J == 0.0);

  // disjoint supports: J splits and overlaps vanish
  SystemState dis;
  dis.coupling = make_uniform_coupling(2, -1.0, c);
  int mid = 128;
  ReducedFunction w1(g), w2(g);
  for (int j = 0; j < mid; ++j) w1.values[j] = std::sin(g.nodes[j] * 2.0);
  for (int j = mid + 1; j <= 256; ++j) w2.values[j] = std::sin((g.nodes[j] - kPi / 2) * 2.0);
  w1.values = w1.values.abs();
  w2.values = w2.values.abs();
  w1.support_lo = 0; w1.support_hi = mid - 1;
  w2.support_lo = mid + 1; w2.support_hi = 256;
  dis.components = {w1, w2};
  EnergyReport rd = system_energy(dis);
  CHECK(rd.overlaps.maxCoeff() == 0.0);
  auto Jsingle = [&](const ReducedFunction& w) {
    return 0.5 * weighted_h1_normsq(w) - weighted_crit_integral(w, c.p_crit) / c.p_crit;
  };
  CHECK(rd.total_J == doctest::Approx(Jsingle(w1) + Jsingle(w2)).epsilon(1e-13));

  // constants with lambda=-1, alpha=beta=3: closed form 17 pi^2 / 6
  EnergyReport rc = system_energy(constant_pair(g, -1.0));
  CHECK(rc.total_J == doctest::Approx(17.0 * kPi * kPi / 6.0).epsilon(1e-8));
  CHECK(rc.overlaps(0, 1) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-9));
}

TEST_CASE("system gradient matches finite differences of the energy") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 128, 1.0);
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss;
  for (int M : {2, 3}) {
    SystemState st = random_state(g, M, -1.5, 100 + M);
    std::vector<ReducedFunction> grad = system_gradient(st);
    for (int trial = 0; trial < 10; ++trial) {
      int i = trial % M;
      ArrayXd v(g.size());
      for (int j = 0; j <= g.K; ++j) v[j] = gauss(rng);
      double paired = (g.lumped_h * grad[i].values * v).sum();
      double eps = 1e-6;
      SystemState p = st, m = st;
      p.components[i].values += eps * v;
      m.components[i].values -= eps * v;
      double fd = (system_energy(p).total_J - system_energy(m).total_J) / (2 * eps);
      CHECK(paired == doctest::Approx(fd).epsilon(1e-5));
    }
  }

  SystemState zero;
  zero.coupling = make_uniform_coupling(2, -1.0, c);
  zero.components.assign(2, ReducedFunction(g));
  auto gz = system_gradient(zero);
  CHECK(gz[0].values.abs().maxCoeff() == 0.0);
}

TEST_CASE("nehari projection: disjoint decouples, members fixed, oracle match") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 256, 1.0);

  // disjoint: scales equal the separate nehari scales
  SystemState dis;
  dis.coupling = make_uniform_coupling(2, -1.0, c);
  ReducedFunction w1(g), w2(g);
  for (int j = 10; j < 110; ++j) w1.values[j] = std::sin(kPi * (j - 10) / 100.0);
  for (int j = 140; j < 250; ++j) w2.values[j] = 2.0 * std::sin(kPi * (j - 140) / 110.0);
  w1.support_lo = 10; w1.support_hi = 109;
  w2.support_lo = 140; w2.support_hi = 249;
  dis.components = {w1, w2};
  double s1 = nehari_scale(w1), s2 = nehari_scale(w2);
  SystemState proj = project_to_system_nehari(dis);
  CHECK(proj.components[0].values.maxCoeff() ==
        doctest::Approx(s1 * w1.values.maxCoeff()).epsilon(1e-10));
  CHECK(proj.components[1].values.maxCoeff() ==
        doctest::Approx(s2 * w2.values.maxCoeff()).epsilon(1e-10));

  // projecting a member of the Nehari set is the identity
  SystemState again = project_to_system_nehari(proj);
  for (int i = 0; i < 2; ++i) {
    CHECK((again.components[i].values - proj.components[i].values).abs().maxCoeff() <
          1e-8 * proj.components[i].values.maxCoeff());
  }

  // overlapping bumps, weak coupling: compare with a nested-bisection oracle
  SystemState ov;
  ov.coupling = make_uniform_coupling(2, -0.1, c);
  ReducedFunction u1(g), u2(g);
  for (int j = 0; j <= 256; ++j) {
    double t = g.nodes[j];
    u1.values[j] = std::exp(-4.0 * (t - 1.2) * (t - 1.2));
    u2.values[j] = std::exp(-4.0 * (t - 1.9) * (t - 1.9));
  }
  ov.components = {u1, u2};
  SystemState povr = project_to_system_nehari(ov);
  // residuals of both Nehari identities
  EnergyReport rep = system_energy(povr);
  const CouplingMatrix& cm = povr.coupling;
  for (int i = 0; i < 2; ++i) {
    double coup = 0.0;
    for (int j = 0; j < 2; ++j) {
      if (j != i) coup += cm.lambda(i, j) * cm.beta(i, j) * rep.overlaps(i, j);
    }
    double r = rep.per_component_normsq[i] - rep.per_component_crit[i] - coup;
    CHECK(std::abs(r) / rep.per_component_normsq[i] < 1e-10);
  }
  // oracle: bisection on s2, inner bisection on s1
  double A1 = weighted_h1_normsq(u1), B1 = weighted_crit_integral(u1, 6.0);
  double A2 = weighted_h1_normsq(u2), B2 = weighted_crit_integral(u2, 6.0);
  double F = weighted_overlap(u1, u2, 3.0, 3.0);  // symmetric exponents
  double lam = -0.1, beta = 3.0;
  auto r1 = [&](double x1, double x2) {
    return x1 * x1 * A1 - std::pow(x1, 6.0) * B1 -
           lam * beta * std::pow(x2, 3.0) * std::pow(x1, 3.0) * F;
  };
  auto r2 = [&](double x1, double x2) {
    return x2 * x2 * A2 - std::pow(x2, 6.0) * B2 -
           lam * beta * std::pow(x1, 3.0) * std::pow(x2, 3.0) * F;
  };
  auto s1_of = [&](double x2) {
    double lo = 1e-4, hi = 1e4;
    for (int i = 0; i < 200; ++i) {
      double mid = std::sqrt(lo * hi);
      (r1(mid, x2) > 0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
  };
  double lo = 1e-4, hi = 1e4;
  for (int i = 0; i < 200; ++i) {
    double mid = std::sqrt(lo * hi);
    (r2(s1_of(mid), mid) > 0 ? lo : hi) = mid;
  }
  double s2o = std::sqrt(lo * hi), s1o = s1_of(s2o);
  double s1g = povr.components[0].values.maxCoeff() / u1.values.maxCoeff();
  double s2g = povr.components[1].values.maxCoeff() / u2.values.maxCoeff();
  CHECK(s1g == doctest::Approx(s1o).epsilon(1e-8));
  CHECK(s2g == doctest::Approx(s2o).epsilon(1e-8));
}

TEST_CASE("single-component minimization reduces to the interval solver") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 128, 1.0);
  CouplingMatrix cm = make_uniform_coupling(1, -1.0, c);
  SystemState init = initial_bumps(g, cm);
  MinimizeResult mr = minimize_system(g, cm, init);
  CHECK(mr.converged);
  double le = least_energy_on_interval(g, 0.0, kPi).energy;
  CHECK(mr.report.c_value == doctest::Approx(le).epsilon(1e-5));
}

TEST_CASE("two-component run: bounds, overlap estimate, supports") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 128, 1.0);
  SystemOptions so;
  ContinuationResult cont = lambda_continuation(g, {-1.0, -10.0, -100.0}, 2, so);
  REQUIRE(cont.completed);
  REQUIRE(cont.stages.size() == 3);

  IntervalSolutionCache cache(g);
  IntervalPartition half{c, 2, {g.nodes[64]}};
  double c0 = partition_energy(half, cache);

  double prev_ov = -1.0;
  for (const auto& st : cont.stages) {
    CHECK(st.converged);
    // bounded by the disjoint benchmark
    CHECK(st.report.c_value <= c0 + 1e-6);
    // paper-style overlap bound: beta * F_ij <= crit_i / (-lambda)
    const CouplingMatrix& cm = st.state.coupling;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        if (i == j) continue;
        CHECK(cm.beta(i, j) * st.report.overlaps(i, j) <=
              st.report.per_component_crit[i] / (-cm.lambda(i, j)) + 1e-9);
      }
    }
    // nontriviality floor
    for (double nsq : st.report.per_component_normsq) CHECK(nsq >= st.d_floor);
    double ov = st.report.overlaps.maxCoeff();
    if (prev_ov > 0.0) CHECK(ov < prev_ov / 5.0);
    prev_ov = ov;
  }

  IntervalPartition part = extract_supports(cont.stages.back().state, 0.01);
  REQUIRE(part.cuts.size() == 1);
  CHECK(std::abs(part.cuts[0] - kPi / 2) < 0.05);
}

TEST_CASE("continuation of length one equals a single minimization") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 96, 1.0);
  ContinuationResult cont = lambda_continuation(g, {-1.0}, 2);
  REQUIRE(cont.completed);
  CouplingMatrix cm = make_uniform_coupling(2, -1.0, c);
  MinimizeResult mr = minimize_system(g, cm, initial_bumps(g, cm));
  CHECK(cont.stages[0].report.c_value == doctest::Approx(mr.report.c_value).epsilon(1e-12));
}

TEST_CASE("extract_supports: degenerate threshold and failure modes") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 128, 1.0);
  SystemState st;
  st.coupling = make_uniform_coupling(2, -1.0, c);
  ReducedFunction w1(g), w2(g);
  for (int j = 10; j <= 50; ++j) w1.values[j] = std::sin(kPi * (j - 10) / 40.0);
  for (int j = 70; j <= 120; ++j) w2.values[j] = std::sin(kPi * (j - 70) / 50.0);
  st.components = {w1, w2};

  IntervalPartition p1 = extract_supports(st, 1.0);  // argmax nodes only
  REQUIRE(p1.cuts.size() == 1);
  CHECK(p1.cuts[0] > g.nodes[30]);
  CHECK(p1.cuts[0] < g.nodes[95]);

  IntervalPartition p2 = extract_supports(st, 0.5);
  CHECK(p2.cuts[0] > g.nodes[40]);
  CHECK(p2.cuts[0] < g.nodes[80]);

  // a disconnected super-threshold set must be reported
  ReducedFunction bad(g);
  for (int j = 10; j <= 20; ++j) bad.values[j] = 1.0;
  for (int j = 40; j <= 50; ++j) bad.values[j] = 1.0;
  st.components[0] = bad;
  CHECK_THROWS_AS(extract_supports(st, 0.5), SegregationIncomplete);
  CHECK_THROWS_AS(extract_supports(st, 0.0), std::invalid_argument);
}
