#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "agrf/datagen.hpp"

using namespace agrf;
using namespace agrf::datagen;

namespace {

/// Central differences of `f` of the given order, fourth-order accurate.
template <typename F>
double central(F f, double x, int order, double h) {
  if (order == 1) return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
  return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h);
}

const PdeProblem &kdv() {
  static const PdeProblem p = solve_kdv();
  return p;
}

const PdeProblem &burgers() {
  static const PdeProblem p = solve_burgers();
  return p;
}

}  // namespace

TEST_CASE("composite truth examples") {
  CHECK(composite_truth(0.0, 0) == 0.0);
  CHECK(composite_truth(0.0, 1) == 0.0);
  CHECK(composite_truth(0.0, 2) == doctest::Approx(2.0 * std::sin(-6.0)).epsilon(1e-15));
  CHECK(composite_truth(0.0, 2) == doctest::Approx(0.55883).epsilon(1e-5));
  CHECK(composite_truth(0.5, 0) == doctest::Approx(0.25 * std::sin(2.0)).epsilon(1e-15));
}

TEST_CASE("oscillator truth examples") {
  const double zeta = 0.1, w0 = 22.0;
  CHECK(oscillator_truth(0.0, 0) == 0.0);
  CHECK(oscillator_truth(0.0, 1) == doctest::Approx(std::sqrt(0.99) * 22.0).epsilon(1e-14));
  // sqrt(0.99) * 22 = 21.889724
  CHECK(oscillator_truth(0.0, 1) == doctest::Approx(21.88972).epsilon(1e-6));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> t(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double s = t(rng);
    const double residual = oscillator_truth(s, 2) + 2 * zeta * w0 * oscillator_truth(s, 1) +
                            w0 * w0 * oscillator_truth(s, 0);
    CHECK(std::abs(residual) < 1e-8);
  }
}

TEST_CASE("analytic derivatives match finite differences") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto &problem : {composite_problem(), oscillator_problem()}) {
    const auto y = [&](double x) { return problem.truth(x, 0); };
    // scale for the relative error: spread of each order over the domain
    const double s1 = truth_spread(problem, 1), s2 = truth_spread(problem, 2);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double x = u(rng);
      worst = std::max(worst, std::abs(central(y, x, 1, 1e-4) - problem.truth(x, 1)) /
                                  std::max(std::abs(problem.truth(x, 1)), s1));
      worst = std::max(worst, std::abs(central(y, x, 2, 1e-3) - problem.truth(x, 2)) /
                                  std::max(std::abs(problem.truth(x, 2)), s2));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("solvers return the initial condition at T = 0") {
  for (const int n : {256, 512}) {
    const auto k = solve_kdv(n, 0.0);
    const auto b = solve_burgers(n, 0.0);
    for (int j = 0; j < n; ++j) {
      const double x = static_cast<double>(j) / n;
      CHECK(k.u(j) == std::cos(2.0 * std::numbers::pi * x));
      CHECK(b.u(j) == std::sin(2.0 * std::numbers::pi * x));
    }
  }
  CHECK_THROWS_AS(solve_kdv(300, 0.5), ValidationError);
  CHECK_THROWS_AS(solve_kdv(128, 0.5), ValidationError);
}

TEST_CASE("solver invariants") {
  const auto &k = kdv();
  CHECK(std::abs(k.u.mean()) < 1e-8);
  CHECK(k.u.allFinite());
  const auto &b = burgers();
  const int n = b.grid_size;
  double worst = std::abs(b.u(0));
  for (int j = 1; j < n; ++j) worst = std::max(worst, std::abs(b.u(j) + b.u(n - j)));
  CHECK(worst < 1e-8);
}

TEST_CASE("solvers converge under grid refinement") {
  const auto coarse_k = solve_kdv(512);
  const auto coarse_b = solve_burgers(512);
  double dk = 0.0, db = 0.0;
  for (int j = 0; j < 512; ++j) {
    dk = std::max(dk, std::abs(coarse_k.u(j) - kdv().u(2 * j)));
    db = std::max(db, std::abs(coarse_b.u(j) - burgers().u(2 * j)));
  }
  CHECK(dk < 1e-6);
  CHECK(db < 1e-8);
}

TEST_CASE("solutions satisfy their equations") {
  for (const PdeProblem *p : {&kdv(), &burgers()}) {
    const double eps = 1e-5;
    const auto later = advance(*p, eps);
    const auto earlier = advance(*p, -eps);
    const int n = p->grid_size;
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
      const double u_t = (later.u(j) - earlier.u(j)) / (2 * eps);
      const double u = p->u(j), u_x = p->u_x(j);
      const double linear = p->kind == PdeKind::kKdv
                                ? kKdvDispersion * p->interpolate(p->x(j), 3)
                                : -kBurgersViscosity * p->u_xx(j);
      worst = std::max(worst, std::abs(u_t + u * u_x + linear));
    }
    CHECK(worst < 1e-4 * p->u.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("spectral interpolation reproduces grid samples") {
  const auto &b = burgers();
  for (const int j : {0, 17, 300, 1023}) {
    CHECK(b.interpolate(b.x(j), 0) == doctest::Approx(b.u(j)).epsilon(1e-12));
    CHECK(b.interpolate(b.x(j), 1) == doctest::Approx(b.u_x(j)).epsilon(1e-10));
    CHECK(b.interpolate(b.x(j), 2) == doctest::Approx(b.u_xx(j)).epsilon(1e-10));
  }
  CHECK(b.interpolate(1.0, 0) == doctest::Approx(b.interpolate(0.0, 0)).epsilon(1e-12));
}

TEST_CASE("sampling patterns") {
  const auto case1 = sample_observations(composite_problem(), {{0.0, 0.4, 0.6, 1.0}});
  CHECK(case1.num_orders() == 1);
  CHECK(case1.count(0) == 4);

  const std::vector<double> sites{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto osc = sample_observations(oscillator_problem(), {sites, sites, sites});
  CHECK(osc.num_orders() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(osc.locations(i) == sites);
    for (int j = 0; j < 5; ++j) CHECK(osc.values(i)[j] == oscillator_truth(sites[j], i));
  }

  const auto clean = sample_observations(kdv(), {20, 20, 20}, NoiseSpec{0.0, 9});
  for (int i = 0; i < 3; ++i) {
    REQUIRE(clean.count(i) == 20);
    const std::set<double> unique(clean.locations(i).begin(), clean.locations(i).end());
    CHECK(unique.size() == 20);
    CHECK(std::is_sorted(clean.locations(i).begin(), clean.locations(i).end()));
    for (std::size_t j = 0; j < 20; ++j) {
      const double x = clean.locations(i)[j];
      const auto grid_index = static_cast<Index>(std::lround(x * kdv().grid_size));
      CHECK(kdv().x(grid_index) == x);
      CHECK(clean.values(i)[j] == kdv().field(i)(grid_index));
    }
  }
  CHECK_THROWS_AS(sample_observations(kdv(), {2000}, NoiseSpec{0.1, 1}), ValidationError);
}

TEST_CASE("noise is deterministic per seed and scales with the fraction") {
  const auto a = sample_observations(burgers(), {20, 20, 20}, NoiseSpec{0.1, 5});
  const auto b = sample_observations(burgers(), {20, 20, 20}, NoiseSpec{0.1, 5});
  const auto c = sample_observations(burgers(), {20, 20, 20}, NoiseSpec{0.1, 6});
  const auto clean = sample_observations(burgers(), {20, 20, 20}, NoiseSpec{0.0, 5});
  const auto loud = sample_observations(burgers(), {20, 20, 20}, NoiseSpec{0.4, 5});
  bool differs = false;
  for (int i = 0; i < 3; ++i) {
    CHECK(a.locations(i) == b.locations(i));
    CHECK(a.values(i) == b.values(i));
    CHECK(a.locations(i) == clean.locations(i));
    differs = differs || a.values(i) != c.values(i);
    const double sigma = truth_spread(burgers(), i);
    for (std::size_t j = 0; j < 20; ++j) {
      const double xi = (a.values(i)[j] - clean.values(i)[j]) / (0.1 * sigma);
      const double xi_loud = (loud.values(i)[j] - clean.values(i)[j]) / (0.4 * sigma);
      CHECK(xi_loud == doctest::Approx(xi).epsilon(1e-8));
    }
  }
  CHECK(differs);
}

TEST_CASE("relative L2 error") {
  const std::vector<double> u{1.0, -2.0, 3.0};
  const std::vector<double> zero(3, 0.0), twice{2.0, -4.0, 6.0};
  CHECK(relative_l2_error(u, u) == 0.0);
  CHECK(relative_l2_error(u, zero) == 1.0);
  CHECK(relative_l2_error(u, twice) == 1.0);
  CHECK_THROWS_AS(relative_l2_error(zero, u), ValidationError);
  CHECK_THROWS_AS(relative_l2_error(u, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("uniform grid") {
  const auto g = uniform_grid(0.0, 1.0, 201);
  CHECK(g.size() == 201);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[100] == 0.5);
  CHECK(uniform_grid(2.0, 3.0, 1) == std::vector<double>{2.0});
}
