#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "agrf/experiments.hpp"
#include "agrf/inference.hpp"
#include "oracles/textbook_gp.hpp"

using namespace agrf;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Hyperparameters<double> hyper(double a, double l, std::vector<double> noise = {}) {
  Hyperparameters<double> hp;
  hp.amplitude = a;
  hp.length_scale = l;
  hp.noise = Eigen::Map<const Eigen::VectorXd>(noise.data(), static_cast<Index>(noise.size()));
  return hp;
}

/// count distinct sites on [0, 1] at least `gap` apart.
std::vector<double> spaced_sites(std::mt19937_64 &rng, int count, double gap) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x;
  while (static_cast<int>(x.size()) < count) {
    const double c = u(rng);
    if (std::all_of(x.begin(), x.end(), [&](double s) { return std::abs(s - c) >= gap; })) {
      x.push_back(c);
    }
  }
  return x;
}

double odd_double_factorial(int q) {
  double out = 1.0;
  for (int k = 2 * q - 1; k > 1; k -= 2) out *= k;
  return out;
}

}  // namespace

TEST_CASE("log likelihood examples") {
  const PolynomialMean<double> zero;
  const ObservationSet<double> y0({{0, 0.0, 0.0}});
  CHECK(log_likelihood(y0, zero, hyper(1, 1), false) == doctest::Approx(-kHalfLog2Pi).epsilon(1e-14));
  CHECK(log_likelihood(y0, zero, hyper(1, 1), false) == doctest::Approx(-0.91894).epsilon(1e-5));

  const ObservationSet<double> y1({{0, 0.0, 1.0}});
  CHECK(log_likelihood(y1, zero, hyper(1, 1), false) ==
        doctest::Approx(-kHalfLog2Pi - 0.5).epsilon(1e-14));
  CHECK(log_likelihood(y1, zero, hyper(1, 1, {1.0}), true) ==
        doctest::Approx(-kHalfLog2Pi - 0.5 * std::log(2.0) - 0.25).epsilon(1e-14));
  CHECK(log_likelihood(y1, zero, hyper(1, 1, {1.0}), true) == doctest::Approx(-1.51552).epsilon(1e-5));

  // an exactly singular noiseless Gram with inconsistent values and no jitter allowance
  const ObservationSet<double> clash({{0, 0.5, 1.0}, {0, 0.5, -1.0}});
  CHECK(std::isinf(log_likelihood(clash, zero, hyper(1, 1), false, JitterPolicy{1e-30, 1e-30, 10.0})));
}

TEST_CASE("noiseless posterior interpolates the data") {
  std::mt19937_64 rng(17);
  // length scales stay near the site spacing so the Gram is well conditioned
  std::uniform_real_distribution<double> v(-2.0, 2.0), amp(0.5, 2.0), len(0.05, 0.12);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Observation<double>> rows;
    for (int order = 0; order <= 2; ++order) {
      for (const double x : spaced_sites(rng, 4, 0.1)) rows.push_back({order, x, v(rng)});
    }
    const double a = amp(rng);
    const FittedModel<double> model(ObservationSet<double>(rows), {}, hyper(a, len(rng)),
                                    NoiseMode::kNoiseless);
    for (const auto &row : rows) {
      const auto p = posterior(model, {row.x, row.order});
      CHECK(std::abs(p.mean - row.value) <= 1e-8 * (1.0 + std::abs(row.value)));
      CHECK(p.variance <= 1e-8 * a * a);
      CHECK(p.variance >= 0.0);
    }
  }
}

TEST_CASE("posterior reverts to the prior far from data") {
  const ObservationSet<double> obs({{0, 0.0, 1.0}, {1, 0.2, -3.0}, {2, 0.5, 4.0}});
  const PolynomialMean<double> mean({0.5, -1.0, 0.25});
  const double a = 1.4, l = 0.1;
  const FittedModel<double> model(obs, mean, hyper(a, l), NoiseMode::kNoiseless);
  for (int q = 0; q <= 2; ++q) {
    const auto p = model.posterior({50.0, q});
    CHECK(p.mean == doctest::Approx(mean.derivative(q, 50.0)).epsilon(1e-12));
    CHECK(p.variance ==
          doctest::Approx(a * a * odd_double_factorial(q) / std::pow(l, 2 * q)).epsilon(1e-12));
  }
}

TEST_CASE("order-0 data matches a textbook GP") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> amp(0.5, 2.0), len(0.01, 0.04), v(-2.0, 2.0), q(-0.1, 1.1);
  std::uniform_int_distribution<int> count(1, 25);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double a = amp(rng), l = len(rng);
    const auto x = spaced_sites(rng, count(rng), 0.02);
    std::vector<double> y;
    std::vector<Observation<double>> rows;
    for (const double s : x) {
      y.push_back(v(rng));
      rows.push_back({0, s, y.back()});
    }
    const oracle::TextbookGp gp({a, l}, x, y);
    const FittedModel<double> model(ObservationSet<double>(rows), {}, hyper(a, l), NoiseMode::kNoiseless);
    if (model.factor().jitter > 0.0) continue;
    worst = std::max(worst, std::abs(model.log_likelihood() - gp.log_likelihood()) /
                                (1.0 + std::abs(gp.log_likelihood())));
    for (int k = 0; k < 10; ++k) {
      const double at = q(rng);
      const auto p = model.posterior({at, 0});
      const auto o = gp.predict(at, 0);
      worst = std::max(worst, std::abs(p.mean - o.mean) / (1.0 + std::abs(o.mean)));
      worst = std::max(worst, std::abs(p.raw_variance - o.variance) / (a * a));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("values and slopes match gradient-enhanced kriging") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> amp(0.5, 2.0), len(0.03, 0.1), v(-2.0, 2.0), q(-0.1, 1.1);
  std::uniform_int_distribution<int> count(1, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double a = amp(rng), l = len(rng);
    const auto x = spaced_sites(rng, count(rng), 0.08);
    std::vector<double> y, g;
    std::vector<Observation<double>> rows;
    for (std::size_t k = 0; k < x.size(); ++k) {
      y.push_back(v(rng));
      g.push_back(v(rng) / l);
    }
    for (std::size_t k = 0; k < x.size(); ++k) rows.push_back({1, x[k], g[k]});
    for (std::size_t k = 0; k < x.size(); ++k) rows.push_back({0, x[k], y[k]});
    const oracle::GradientEnhancedKriging gek({a, l}, x, y, g);
    const FittedModel<double> model(ObservationSet<double>(rows), {}, hyper(a, l), NoiseMode::kNoiseless);
    REQUIRE(model.factor().jitter == 0.0);
    worst = std::max(worst, std::abs(model.log_likelihood() - gek.log_likelihood()) /
                                (1.0 + std::abs(gek.log_likelihood())));
    for (int k = 0; k < 10; ++k) {
      const double at = q(rng);
      for (int order = 0; order <= 1; ++order) {
        const auto p = model.posterior({at, order});
        const auto o = gek.predict(at, order);
        const double prior = order == 0 ? a * a : a * a / (l * l);
        worst = std::max(worst, std::abs(p.mean - o.mean) / (1.0 + std::abs(o.mean)));
        worst = std::max(worst, std::abs(p.raw_variance - o.variance) / prior);
      }
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("noise adds at least delta_q^2 to the posterior variance") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> v(-1.0, 1.0), d(0.01, 0.8), at(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Observation<double>> rows;
    for (int order = 0; order <= 2; ++order) {
      for (const double x : spaced_sites(rng, 3, 0.1)) rows.push_back({order, x, v(rng)});
    }
    const ObservationSet<double> obs(rows);
    const auto noisy_hp = hyper(1.1, 0.3, {d(rng), d(rng), d(rng)});
    const FittedModel<double> quiet(obs, {}, noisy_hp, NoiseMode::kNoiseless);
    const FittedModel<double> noisy(obs, {}, noisy_hp, NoiseMode::kMultiDelta);
    for (int k = 0; k < 10; ++k) {
      const double x = at(rng);
      for (int q = 0; q <= 2; ++q) {
        const double dq = noisy_hp.noise(q);
        const double gap = noisy.posterior({x, q}).raw_variance - quiet.posterior({x, q}).raw_variance;
        CHECK(gap >= dq * dq - 1e-10);
      }
    }
  }
}

TEST_CASE("another observation never increases the posterior variance") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> v(-1.0, 1.0), at(0.0, 1.0), amp(0.5, 1.5), len(0.2, 0.6);
  std::uniform_int_distribution<int> order(0, 2), count(1, 8);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto sites = spaced_sites(rng, count(rng) + 1, 0.05);
    std::vector<Observation<double>> rows;
    for (const double x : sites) rows.push_back({order(rng), x, v(rng)});
    const std::vector<Observation<double>> fewer(rows.begin(), rows.end() - 1);
    const auto hp = hyper(amp(rng), len(rng));
    const FittedModel<double> small(ObservationSet<double>(fewer), {}, hp, NoiseMode::kNoiseless);
    const FittedModel<double> large(ObservationSet<double>(rows), {}, hp, NoiseMode::kNoiseless);
    if (small.factor().jitter > 0.0 || large.factor().jitter > 0.0) continue;
    ++checked;
    for (int k = 0; k < 10; ++k) {
      const double x = at(rng);
      for (int q = 0; q <= 2; ++q) {
        const double prior = hp.kernel().derivative(q, q, x, x);
        CHECK(large.posterior({x, q}).raw_variance <=
              small.posterior({x, q}).raw_variance + 1e-9 * std::max(1.0, prior));
      }
    }
  }
  CHECK(checked >= 90);
}

TEST_CASE("log likelihood is smooth in log parameters") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> v(-1.0, 1.0);
  std::vector<Observation<double>> rows;
  for (int order = 0; order <= 2; ++order) {
    for (const double x : spaced_sites(rng, 5, 0.05)) rows.push_back({order, x, v(rng)});
  }
  const ObservationSet<double> obs(rows);
  const PolynomialMean<double> zero;
  Eigen::VectorXd theta(5);
  theta << std::log(0.9), std::log(0.2), std::log(0.1), std::log(0.5), std::log(3.0);
  const auto ll = [&](const Eigen::VectorXd &t) {
    return log_likelihood(obs, zero,
                          hyper(std::exp(t(0)), std::exp(t(1)),
                                {std::exp(t(2)), std::exp(t(3)), std::exp(t(4))}),
                          true);
  };
  for (Index k = 0; k < theta.size(); ++k) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(theta.size(), k);
    const double slope = (ll(theta + 1e-5 * e) - ll(theta - 1e-5 * e)) / 2e-5;
    // first-order prediction of a small step
    const double h = 1e-3;
    const double change = ll(theta + h * e) - ll(theta);
    CHECK(std::abs(change - h * slope) <= 1e-4 * std::max(1.0, std::abs(h * slope)) + 50 * h * h);
    const double coarse = (ll(theta + 1e-3 * e) - ll(theta - 1e-3 * e)) / 2e-3;
    CHECK(std::abs(coarse - slope) <= 1e-4 * std::max(1.0, std::abs(slope)));
  }
}

TEST_CASE("fit respects the noise mode") {
  std::vector<Observation<double>> rows;
  for (int k = 0; k <= 6; ++k) rows.push_back({0, k / 6.0, std::sin(4.0 * k / 6.0)});
  for (int k = 0; k <= 3; ++k) rows.push_back({2, k / 3.0, -16.0 * std::sin(4.0 * k / 3.0) + 0.1 * k});
  const ObservationSet<double> obs(rows);
  FitConfig config;
  config.seed = 3;

  const auto quiet = fit(obs, PolynomialMean<double>(), NoiseMode::kNoiseless, config);
  CHECK(quiet.hyperparameters().noise.size() == 3);
  CHECK((quiet.hyperparameters().noise.array() == 0.0).all());
  CHECK(quiet.report().restarts.size() == 8);

  const auto shared = fit(obs, PolynomialMean<double>(), NoiseMode::kOneDelta, config);
  const auto &sn = shared.hyperparameters().noise;
  CHECK(sn(0) > 0.0);
  CHECK(sn(0) == sn(1));
  CHECK(sn(0) == sn(2));

  const auto multi = fit(obs, PolynomialMean<double>(), NoiseMode::kMultiDelta, config);
  CHECK(multi.hyperparameters().noise(1) == 0.0);  // no order-1 data
  CHECK(multi.log_likelihood() >= shared.log_likelihood() - 1e-6);

  const auto again = fit(obs, PolynomialMean<double>(), NoiseMode::kMultiDelta, config);
  CHECK(again.hyperparameters().amplitude == multi.hyperparameters().amplitude);
  CHECK(again.hyperparameters().length_scale == multi.hyperparameters().length_scale);
  CHECK(again.hyperparameters().noise == multi.hyperparameters().noise);
}

TEST_CASE("fit rejects what it cannot model") {
  const ObservationSet<double> dup({{0, 0.5, 1.0}, {0, 0.5, 2.0}});
  CHECK_THROWS_AS(fit(dup, PolynomialMean<double>(), NoiseMode::kNoiseless), ValidationError);
  CHECK_NOTHROW(fit(dup, PolynomialMean<double>(), NoiseMode::kOneDelta));

  const ObservationSet<double> high({{0, 0.0, 1.0}, {5, 0.5, 2.0}});
  CHECK_THROWS_AS(fit(high, PolynomialMean<double>(), NoiseMode::kNoiseless), CapacityError);

  FitConfig none;
  none.restarts = 0;
  const ObservationSet<double> one({{0, 0.0, 1.0}});
  CHECK_THROWS_AS(fit(one, PolynomialMean<double>(), NoiseMode::kNoiseless, none), ValidationError);
}

TEST_CASE("query orders beyond the kernel table are refused") {
  const ObservationSet<double> obs({{0, 0.0, 1.0}, {1, 0.3, 0.0}, {2, 0.6, -1.0}});
  const FittedModel<double> model(obs, {}, hyper(1, 0.3), NoiseMode::kNoiseless);
  CHECK(model.max_query_order() == 4);
  CHECK_NOTHROW(model.posterior({0.2, 4}));
  CHECK_THROWS_AS(model.posterior({0.2, 5}), CapacityError);
  CHECK_THROWS_AS(model.posterior({0.2, -1}), CapacityError);

  const FittedModel<double> wide(obs, {}, hyper(1, 0.3), NoiseMode::kNoiseless, {}, 10);
  const auto p = wide.posterior({0.2, 5});
  CHECK(std::isfinite(p.mean));
  CHECK(p.variance >= 0.0);
  CHECK(p.upper - p.mean == doctest::Approx(p.mean - p.lower));
}

TEST_CASE("prediction curves") {
  const ObservationSet<double> obs({{0, 0.0, 1.0}, {0, 1.0, 0.0}, {1, 0.5, -1.0}, {2, 0.5, 0.3}});
  const FittedModel<double> model(obs, {}, hyper(0.7, 0.4, {0.1, 0.1, 0.1}), NoiseMode::kOneDelta);
  const auto grid = datagen::uniform_grid(0.0, 1.0, 201);
  const std::vector<int> none;
  CHECK(predict_curve(model, std::span<const double>(grid), std::span<const int>(none)).empty());

  const std::vector<int> orders{0, 1, 2};
  const auto curve = predict_curve(model, std::span<const double>(grid), std::span<const int>(orders));
  REQUIRE(curve.size() == 603);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const auto &p = curve[k];
    CHECK(p.order == static_cast<int>(k / 201));
    CHECK(p.x == grid[k % 201]);
    CHECK(std::isfinite(p.mean));
    CHECK(p.variance >= 0.0);
    const double half = kBandMultiplier * std::sqrt(p.variance);
    CHECK(p.upper - p.mean == doctest::Approx(half).epsilon(1e-12));
    CHECK(p.mean - p.lower == doctest::Approx(half).epsilon(1e-12));
  }
  const std::vector<double> empty;
  CHECK_THROWS_AS(predict_curve(model, std::span<const double>(empty), std::span<const int>(orders)),
                  ValidationError);
}

TEST_CASE("length scale is recovered from prior draws") {
  const double a = 1.0, l = 0.3;
  std::vector<double> recovered;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> u(0.0, 4.0);
    std::vector<double> x(40);
    for (auto &s : x) s = u(rng);
    std::sort(x.begin(), x.end());
    Eigen::MatrixXd k(40, 40);
    for (int r = 0; r < 40; ++r) {
      for (int c = 0; c < 40; ++c) {
        k(r, c) = a * a * std::exp(-(x[r] - x[c]) * (x[r] - x[c]) / (2 * l * l));
      }
      k(r, r) += 1e-10;
    }
    const Eigen::MatrixXd lower = k.llt().matrixL();
    Eigen::VectorXd xi(40);
    for (auto &e : xi) e = normal(rng);
    const Eigen::VectorXd y = lower * xi;
    std::vector<Observation<double>> rows;
    for (int r = 0; r < 40; ++r) rows.push_back({0, x[r], y(r)});
    FitConfig config;
    config.seed = seed;
    const auto model = fit(ObservationSet<double>(rows), PolynomialMean<double>(),
                           NoiseMode::kNoiseless, config);
    recovered.push_back(model.hyperparameters().length_scale);
  }
  std::nth_element(recovered.begin(), recovered.begin() + 10, recovered.end());
  const double upper_median = recovered[10];
  std::nth_element(recovered.begin(), recovered.begin() + 9, recovered.end());
  const double median = 0.5 * (recovered[9] + upper_median);
  CHECK(median >= 0.7 * l);
  CHECK(median <= 1.3 * l);
}

TEST_CASE("multi-delta fit on noisy Burgers data finds noise in every order") {
  const auto reference = experiments::reference_solution(experiments::Example::kBurgers);
  const auto result = experiments::run(experiments::Example::kBurgers, "multi-delta", {}, &*reference);
  const auto &noise = result.models.front().hyperparameters().noise;
  REQUIRE(noise.size() == 3);
  for (Index i = 0; i < 3; ++i) CHECK(noise(i) > 0.0);
}
