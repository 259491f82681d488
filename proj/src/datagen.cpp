#include "agrf/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace agrf::datagen {

namespace {

void require_truth_order(int order) {
  if (order < 0 || order > 2) {
    throw ValidationError("closed-form truth is available for orders 0..2, got " +
                          std::to_string(order));
  }
}

double population_std(const std::vector<double> &values) {
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  double acc = 0.0;
  for (const double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace

double composite_truth(double x, int order) {
  require_truth_order(order);
  const double s = std::sin(16.0 * x - 6.0);
  const double c = std::cos(16.0 * x - 6.0);
  switch (order) {
    case 0: return x * x * s;
    case 1: return 2.0 * x * s + 16.0 * x * x * c;
    default: return 2.0 * s + 64.0 * x * c - 256.0 * x * x * s;
  }
}

double oscillator_truth(double t, int order) {
  require_truth_order(order);
  const double decay = kOscillatorDamping * kOscillatorFrequency;
  const double freq =
      std::sqrt(1.0 - kOscillatorDamping * kOscillatorDamping) * kOscillatorFrequency;
  const double e = std::exp(-decay * t);
  const double s = std::sin(freq * t);
  const double c = std::cos(freq * t);
  switch (order) {
    case 0: return e * s;
    case 1: return e * (freq * c - decay * s);
    default: return e * ((decay * decay - freq * freq) * s - 2.0 * decay * freq * c);
  }
}

AnalyticProblem composite_problem() { return {"composite", composite_truth, 0.0, 1.0}; }

AnalyticProblem oscillator_problem() { return {"oscillator", oscillator_truth, 0.0, 1.0}; }

std::vector<double> uniform_grid(double lo, double hi, int count) {
  if (count < 1) throw ValidationError("grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (int k = 0; k < count; ++k) grid[static_cast<std::size_t>(k)] = lo + step * k;
  grid.back() = hi;
  return grid;
}

double truth_spread(const AnalyticProblem &problem, int order) {
  std::vector<double> values;
  for (const double x : uniform_grid(problem.lo, problem.hi, kEvaluationGridSize)) {
    values.push_back(problem.truth(x, order));
  }
  return population_std(values);
}

double truth_spread(const PdeProblem &problem, int order) {
  const auto &f = problem.field(order);
  return population_std(std::vector<double>(f.data(), f.data() + f.size()));
}

ObservationSet<double> sample_observations(const AnalyticProblem &problem,
                                           const std::vector<std::vector<double>> &locations,
                                           const NoiseSpec &noise) {
  if (noise.fraction < 0.0) throw ValidationError("noise fraction must be nonnegative");
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Observation<double>> rows;
  for (std::size_t order = 0; order < locations.size(); ++order) {
    const int i = static_cast<int>(order);
    const double sigma = noise.fraction > 0.0 ? truth_spread(problem, i) : 0.0;
    for (const double x : locations[order]) {
      if (x < problem.lo || x > problem.hi) {
        throw ValidationError("location " + std::to_string(x) + " outside the domain of " +
                              problem.name);
      }
      const double xi = normal(rng);
      double value = problem.truth(x, i);
      if (noise.fraction > 0.0) value += noise.fraction * sigma * xi;
      rows.push_back({i, x, value});
    }
  }
  return ObservationSet<double>(rows);
}

ObservationSet<double> sample_observations(const PdeProblem &problem,
                                           const std::vector<int> &counts,
                                           const NoiseSpec &noise) {
  if (noise.fraction < 0.0) throw ValidationError("noise fraction must be nonnegative");
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = problem.grid_size;
  std::vector<Observation<double>> rows;
  for (std::size_t order = 0; order < counts.size(); ++order) {
    const int i = static_cast<int>(order);
    const int count = counts[order];
    if (count < 0 || count > n) {
      throw ValidationError("cannot draw " + std::to_string(count) + " distinct points from a " +
                            std::to_string(n) + "-point grid");
    }
    std::vector<int> indices(static_cast<std::size_t>(n));
    std::iota(indices.begin(), indices.end(), 0);
    for (int k = 0; k < count; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(indices[static_cast<std::size_t>(k)],
                indices[static_cast<std::size_t>(pick(rng))]);
    }
    std::sort(indices.begin(), indices.begin() + count);
    const double sigma = truth_spread(problem, i);
    const auto &field = problem.field(i);
    for (int k = 0; k < count; ++k) {
      const int idx = indices[static_cast<std::size_t>(k)];
      const double xi = normal(rng);
      double value = field(idx);
      if (noise.fraction > 0.0) value += noise.fraction * sigma * xi;
      rows.push_back({i, problem.x(idx), value});
    }
  }
  return ObservationSet<double>(rows);
}

double relative_l2_error(std::span<const double> truth, std::span<const double> approx) {
  if (truth.size() != approx.size()) {
    throw ValidationError("relative L2 error needs vectors of equal length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    num += (truth[k] - approx[k]) * (truth[k] - approx[k]);
    den += truth[k] * truth[k];
  }
  if (!(den > 0.0)) throw ValidationError("relative L2 error is undefined for a zero truth vector");
  return std::sqrt(num / den);
}

}  // namespace agrf::datagen
