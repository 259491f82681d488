#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "agrf/field.hpp"
#include "agrf/types.hpp"

namespace agrf::datagen {

/// x^2 sin(16x - 6) and its first two derivatives.
double composite_truth(double x, int order);

/// Damped oscillator exp(-zeta w0 t) sin(sqrt(1 - zeta^2) w0 t) with
/// zeta = 0.1, w0 = 22, and its first two derivatives.
double oscillator_truth(double t, int order);

inline constexpr double kOscillatorDamping = 0.1;
inline constexpr double kOscillatorFrequency = 22.0;

/// A closed-form test function on [lo, hi] with derivatives up to order 2.
struct AnalyticProblem {
  std::string name;
  std::function<double(double, int)> truth;
  double lo = 0.0;
  double hi = 1.0;
};

AnalyticProblem composite_problem();
AnalyticProblem oscillator_problem();

enum class PdeKind { kKdv, kBurgers };

/// Periodic solution on [0, 1) at the final time, with its spectrum so the
/// field and its derivatives can be evaluated anywhere.
struct PdeProblem {
  PdeKind kind = PdeKind::kKdv;
  std::string name;
  int grid_size = 0;
  double coefficient = 0.0;  ///< dispersion (KdV) or viscosity (Burgers')
  double final_time = 0.0;
  double time_step = 0.0;
  int steps = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd u_x;
  Eigen::VectorXd u_xx;
  std::vector<std::complex<double>> spectrum;  ///< unnormalised DFT of u on the grid

  /// Grid samples of the order-th spatial derivative (order <= 2).
  const Eigen::VectorXd &field(int order) const;
  /// Spectral interpolation of the order-th spatial derivative at any x.
  double interpolate(double x, int order) const;
};

struct SpectralSettings {
  double cfl = 0.05;        ///< dt = cfl * h / max|u0|
  double max_cfl = 1.0;     ///< refine dt when max|u| dt / h exceeds this
  int max_refinements = 6;  ///< dt halvings before giving up
};

inline constexpr double kKdvDispersion = 0.0005;
inline constexpr double kBurgersViscosity = 0.01;
inline constexpr double kFinalTime = 0.5;
inline constexpr int kReferenceGridSize = 1024;

/// u_t + u u_x + 0.0005 u_xxx = 0, u(x, 0) = cos(2 pi x), periodic on [0, 1).
PdeProblem solve_kdv(int grid_size = kReferenceGridSize, double final_time = kFinalTime,
                     const SpectralSettings &settings = {});

/// u_t + u u_x - 0.01 u_xx = 0, u(x, 0) = sin(2 pi x), periodic on [0, 1).
PdeProblem solve_burgers(int grid_size = kReferenceGridSize, double final_time = kFinalTime,
                         const SpectralSettings &settings = {});

/// One integrating-factor RK4 step of size dt (may be negative) from the
/// problem's final state. Used to probe the time derivative of a solution.
PdeProblem advance(const PdeProblem &problem, double dt);

/// Additive Gaussian noise z = y + fraction * sigma_i * xi, xi ~ N(0, 1),
/// where sigma_i is the spread of the order-i truth over the domain grid.
struct NoiseSpec {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Observations at given locations; locations[i] lists order-i sites.
ObservationSet<double> sample_observations(const AnalyticProblem &problem,
                                           const std::vector<std::vector<double>> &locations,
                                           const NoiseSpec &noise = {});

/// counts[i] order-i observations drawn uniformly without replacement from
/// the solver grid, independently per order.
ObservationSet<double> sample_observations(const PdeProblem &problem,
                                           const std::vector<int> &counts,
                                           const NoiseSpec &noise);

/// Standard deviation of the order-i truth over the evaluation grid used to
/// scale noise.
double truth_spread(const AnalyticProblem &problem, int order);
double truth_spread(const PdeProblem &problem, int order);

/// ||truth - approx||_2 / ||truth||_2
double relative_l2_error(std::span<const double> truth, std::span<const double> approx);

/// count uniformly spaced points on [lo, hi] including both ends.
std::vector<double> uniform_grid(double lo, double hi, int count);

inline constexpr int kEvaluationGridSize = 201;

}  // namespace agrf::datagen
