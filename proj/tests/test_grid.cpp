#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <sstream>

#include "orbipart/grid.hpp"
#include "oracles.hpp"

using namespace orbipart;
constexpr double kPi = std::numbers::pi;

namespace {
ReducedFunction sampled(const OrbitGrid& g, double (*f)(double)) {
  ReducedFunction w(g);
  for (int j = 0; j <= g.K; ++j) w.values[j] = f(g.nodes[j]);
  return w;
}
}  // namespace

TEST_CASE("build_grid basics") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 64, 1.0);
  CHECK(g.nodes[0] == 0.0);
  CHECK(g.nodes[64] == kPi);
  CHECK(g.nodes[32] == doctest::Approx(kPi / 2).epsilon(1e-15));
  for (int j = 0; j < 64; ++j) CHECK(g.nodes[j] < g.nodes[j + 1]);
  CHECK(g.h_values[0] == 0.0);
  CHECK(g.h_values[64] == 0.0);
  CHECK((g.quad_weights >= 0.0).all());
  CHECK_THROWS_AS(build_grid(c, 16, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(c, 64, 0.5), std::invalid_argument);
}

TEST_CASE("graded grid is symmetric and nested under doubling") {
  SymmetryConfig c = make_symmetry_config(3, 3);
  OrbitGrid g = build_grid(c, 64, 2.0);
  for (int j = 0; j <= 64; ++j) {
    CHECK(g.nodes[j] == doctest::Approx(kPi - g.nodes[64 - j]).epsilon(1e-14));
  }
  OrbitGrid g2 = build_grid(c, 128, 2.0);
  for (int j = 0; j <= 64; ++j) {
    CHECK(g2.nodes[2 * j] == doctest::Approx(g.nodes[j]).epsilon(1e-14));
  }
}

TEST_CASE("quadrature identity: integral of h equals 4 |S^N|") {
  for (auto [m, n] : {std::pair{2, 2}, {2, 3}, {3, 3}, {2, 4}, {4, 4}, {2, 6}, {3, 5}}) {
    SymmetryConfig c = make_symmetry_config(m, n);
    double target = 4.0 * sphere_area(c.N + 1);
    for (int K : {128, 512}) {
      OrbitGrid g = build_grid(c, K, default_grading(c));
      double got = (g.quad_weights * g.h_values).sum();
      CHECK(std::abs(got - target) <= 1e-6);  // absolute, all N <= 7
    }
  }
  // closed form for (2,2): 8 pi^2 within 1e-6 relative already at K=128
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 128, 1.0);
  CHECK((g.quad_weights * g.h_values).sum() ==
        doctest::Approx(8.0 * kPi * kPi).epsilon(1e-6));
}

TEST_CASE("h1 norm of constants matches the sphere-side closed form") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 256, 1.0);
  ReducedFunction w(g);
  w.values.setConstant(1.0);
  // (a_N/4) * int h = (3/16) * 8 pi^2
  CHECK(weighted_h1_normsq(w) ==
        doctest::Approx(1.5 * kPi * kPi).epsilon(1e-9));
  ReducedFunction z(g);
  CHECK(weighted_h1_normsq(z) == 0.0);
}

TEST_CASE("h1 norm of sin matches a dense independent quadrature") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  // closed form: int (cos^2 + (3/16) sin^2) 4 pi^2 sin dt = 4 pi^2 (2/3 + 1/4)
  double want = 4.0 * kPi * kPi * (2.0 / 3.0 + 0.25);
  double oracle = oracles::trapezoid(
      [&](double t) {
        double h = weight_h(t, c);
        return (std::cos(t) * std::cos(t) + (3.0 / 16.0) * std::sin(t) * std::sin(t)) * h;
      },
      0.0, kPi);
  CHECK(oracle == doctest::Approx(want).epsilon(1e-9));
  OrbitGrid g = build_grid(c, 16384, 1.0);
  ReducedFunction w = sampled(g, [](double t) { return std::sin(t); });
  CHECK(weighted_h1_normsq(w) == doctest::Approx(want).epsilon(3e-8));

  // second-order refinement: error shrinks ~4x per doubling
  OrbitGrid g1 = build_grid(c, 256, 1.0);
  OrbitGrid g2 = build_grid(c, 512, 1.0);
  double e1 =
      std::abs(weighted_h1_normsq(sampled(g1, [](double t) { return std::sin(t); })) - want);
  double e2 =
      std::abs(weighted_h1_normsq(sampled(g2, [](double t) { return std::sin(t); })) - want);
  CHECK(e2 < e1 / 3.0);
}

TEST_CASE("crit integral: closed forms and homogeneity") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 512, 1.0);
  ReducedFunction one(g);
  one.values.setConstant(1.0);
  CHECK(weighted_crit_integral(one, 6.0) ==
        doctest::Approx(2.0 * kPi * kPi).epsilon(1e-9));
  ReducedFunction z(g);
  CHECK(weighted_crit_integral(z, 6.0) == 0.0);
  ReducedFunction s = sampled(g, [](double t) { return std::sin(t); });
  CHECK(weighted_crit_integral(s, 2.0) ==
        doctest::Approx(kPi * kPi * 4.0 / 3.0).epsilon(1e-7));
  // homogeneity of degree p
  ReducedFunction s3 = s;
  s3.values *= 3.0;
  for (double p : {2.0, 3.5, 6.0}) {
    CHECK(weighted_crit_integral(s3, p) ==
          doctest::Approx(std::pow(3.0, p) * weighted_crit_integral(s, p))
              .epsilon(1e-13));
  }
  CHECK_THROWS_AS(weighted_crit_integral(s, 0.5), std::invalid_argument);
}

TEST_CASE("overlap integral: disjoint supports, identity case, constants") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 256, 1.0);
  ReducedFunction a(g), b(g);
  int mid = 128;
  for (int j = 0; j < mid; ++j) a.values[j] = 1.0;
  for (int j = mid + 1; j <= 256; ++j) b.values[j] = 1.0;
  a.support_lo = 0; a.support_hi = mid - 1;
  b.support_lo = mid + 1; b.support_hi = 256;
  CHECK(weighted_overlap(a, b, 3.0, 3.0) == 0.0);

  ReducedFunction w = sampled(g, [](double t) { return 0.5 + std::sin(t); });
  CHECK(weighted_overlap(w, w, 3.0, 3.0) ==
        doctest::Approx(weighted_crit_integral(w, 6.0)).epsilon(1e-13));

  ReducedFunction one(g), two(g);
  one.values.setConstant(1.0);
  two.values.setConstant(1.0);
  CHECK(weighted_overlap(one, two, 3.0, 3.0) ==
        doctest::Approx(2.0 * kPi * kPi).epsilon(1e-9));
  CHECK_THROWS_AS(weighted_overlap(one, two, 0.9, 5.1), std::invalid_argument);
  CHECK_THROWS_AS(weighted_overlap(one, two, 2.0, 3.0), std::invalid_argument);
}

TEST_CASE("reduced residual: zero, equilibrium constant, smooth-function consistency") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 512, 1.0);
  ReducedFunction z(g);
  ReducedFunction rz = reduced_residual(z, 0.3, 2.8);
  CHECK(rz.values.abs().maxCoeff() == 0.0);

  // the constant a_N^{1/(2*-2)} solves the equation exactly
  ReducedFunction cst(g);
  cst.values.setConstant(std::pow(c.a_N, 0.25));
  CHECK(residual_sup(cst, 0.0, kPi, 1) < 1e-10);

  // generic smooth function: residual approaches the symbolic value at O(h^2)
  auto symbolic = [&](double t) {
    double w = std::sin(t), w1 = std::cos(t), w2 = -std::sin(t);
    double hr = log_weight_h_deriv(t, c);
    return -w2 - hr * w1 + (c.a_N / 4) * w - 0.25 * std::pow(std::abs(w), 4.0) * w;
  };
  OrbitGrid gA = build_grid(c, 256, 1.0), gB = build_grid(c, 512, 1.0);
  double eA = 0.0, eB = 0.0;
  {
    ReducedFunction w = sampled(gA, [](double t) { return std::sin(t); });
    ReducedFunction r = reduced_residual(w, 0.0, kPi);
    for (int j = 8; j <= gA.K - 8; ++j)
      eA = std::max(eA, std::abs(r.values[j] - symbolic(gA.nodes[j])));
  }
  {
    ReducedFunction w = sampled(gB, [](double t) { return std::sin(t); });
    ReducedFunction r = reduced_residual(w, 0.0, kPi);
    for (int j = 16; j <= gB.K - 16; ++j)
      eB = std::max(eB, std::abs(r.values[j] - symbolic(gB.nodes[j])));
  }
  CHECK(eB < eA / 3.0);
  CHECK_THROWS_AS(reduced_residual(z, -0.5, 1.0), std::domain_error);
}

TEST_CASE("integral refinement convergence on smooth functions") {
  SymmetryConfig c = make_symmetry_config(2, 3);
  OrbitGrid g1 = build_grid(c, 256, 1.0), g2 = build_grid(c, 512, 1.0);
  auto f = [](double t) { return std::exp(std::cos(t)); };
  ReducedFunction w1(g1), w2(g2);
  for (int j = 0; j <= g1.K; ++j) w1.values[j] = f(g1.nodes[j]);
  for (int j = 0; j <= g2.K; ++j) w2.values[j] = f(g2.nodes[j]);
  double i1 = weighted_crit_integral(w1, 2.0), i2 = weighted_crit_integral(w2, 2.0);
  CHECK(std::abs(i1 - i2) < 200.0 / (256.0 * 256.0));
  double n1 = weighted_h1_normsq(w1), n2 = weighted_h1_normsq(w2);
  CHECK(std::abs(n1 - n2) < 400.0 / (256.0 * 256.0));
}

TEST_CASE("csv serialization carries 17 significant digits") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g = build_grid(c, 32, 1.0);
  ReducedFunction w(g);
  w.values.setConstant(1.0 / 3.0);
  std::ostringstream os;
  write_csv(w, os);
  std::string s = os.str();
  CHECK(s.substr(0, 4) == "t,w\n");
  CHECK(s.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("grid mismatch raises") {
  SymmetryConfig c = make_symmetry_config(2, 2);
  OrbitGrid g1 = build_grid(c, 64, 1.0), g2 = build_grid(c, 64, 1.0);
  ReducedFunction a(g1), b(g2);
  CHECK_THROWS_AS(check_same_grid(a, b), std::invalid_argument);
}
