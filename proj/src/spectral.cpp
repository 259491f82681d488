// Pseudo-spectral solvers for the periodic KdV and Burgers' problems.
//
// Both equations are written as u_t = L u - (u^2 / 2)_x with L diagonal in
// Fourier space; L is integrated exactly (integrating factor) and the
// nonlinear term with classical RK4, dealiased by the 2/3 rule.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "agrf/datagen.hpp"

namespace agrf::datagen {

namespace {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Signed mode index of DFT slot m; the Nyquist slot maps to 0 for derivatives.
int signed_mode(int m, int n) {
  if (m < n / 2) return m;
  if (m == n / 2) return 0;
  return m - n;
}

class PeriodicStepper {
 public:
  PeriodicStepper(PdeKind kind, double coefficient, int n)
      : kind_(kind), coefficient_(coefficient), n_(n), wavenumber_(n), mask_(n), physical_(n),
        work_(n) {
    for (int m = 0; m < n; ++m) {
      const int s = signed_mode(m, n);
      wavenumber_[m] = kTwoPi * s;
      mask_[m] = (m != n / 2 && 3 * std::abs(s) <= n) ? 1.0 : 0.0;
    }
  }

  Complex linear_symbol(int m) const {
    const double k = wavenumber_[m];
    if (kind_ == PdeKind::kKdv) return Complex(0.0, coefficient_ * k * k * k);
    return Complex(-coefficient_ * k * k, 0.0);
  }

  /// -(u^2/2)_x in Fourier space; also records max|u| of the evaluated state.
  Spectrum nonlinear(const Spectrum &u_hat) {
    fft_.inv(work_, u_hat);
    for (int j = 0; j < n_; ++j) {
      const double u = work_[j].real();
      max_abs_ = std::max(max_abs_, std::abs(u));
      if (!std::isfinite(u)) max_abs_ = std::numeric_limits<double>::infinity();
      physical_[j] = Complex(0.5 * u * u, 0.0);
    }
    Spectrum out;
    fft_.fwd(out, physical_);
    for (int m = 0; m < n_; ++m) out[m] *= Complex(0.0, -wavenumber_[m]) * mask_[m];
    return out;
  }

  Spectrum step(const Spectrum &u_hat, double dt) {
    std::vector<Complex> half(n_), full(n_);
    for (int m = 0; m < n_; ++m) {
      half[m] = std::exp(linear_symbol(m) * (0.5 * dt));
      full[m] = half[m] * half[m];
    }
    const Spectrum a = nonlinear(u_hat);
    Spectrum stage(n_);
    for (int m = 0; m < n_; ++m) stage[m] = half[m] * (u_hat[m] + 0.5 * dt * a[m]);
    const Spectrum b = nonlinear(stage);
    for (int m = 0; m < n_; ++m) stage[m] = half[m] * u_hat[m] + 0.5 * dt * b[m];
    const Spectrum c = nonlinear(stage);
    for (int m = 0; m < n_; ++m) stage[m] = full[m] * u_hat[m] + dt * half[m] * c[m];
    const Spectrum d = nonlinear(stage);
    Spectrum next(n_);
    for (int m = 0; m < n_; ++m) {
      next[m] = full[m] * u_hat[m] +
                dt / 6.0 * (full[m] * a[m] + 2.0 * half[m] * (b[m] + c[m]) + d[m]);
    }
    return next;
  }

  void reset_max() { max_abs_ = 0.0; }
  double max_abs() const { return max_abs_; }

  Eigen::VectorXd derivative(const Spectrum &u_hat, int order) {
    Spectrum scaled(n_);
    for (int m = 0; m < n_; ++m) {
      Complex factor(1.0, 0.0);
      if (order > 0 && m == n_ / 2) factor = 0.0;
      for (int k = 0; k < order; ++k) factor *= Complex(0.0, wavenumber_[m]);
      scaled[m] = u_hat[m] * factor;
    }
    fft_.inv(work_, scaled);
    Eigen::VectorXd out(n_);
    for (int j = 0; j < n_; ++j) out(j) = work_[j].real();
    return out;
  }

  Spectrum transform(const Eigen::VectorXd &u) {
    for (int j = 0; j < n_; ++j) physical_[j] = Complex(u(j), 0.0);
    Spectrum out;
    fft_.fwd(out, physical_);
    return out;
  }

 private:
  PdeKind kind_;
  double coefficient_;
  int n_;
  std::vector<double> wavenumber_;
  std::vector<double> mask_;
  Spectrum physical_;
  Spectrum work_;
  Eigen::FFT<double> fft_;
  double max_abs_ = 0.0;
};

double coefficient_of(PdeKind kind) {
  return kind == PdeKind::kKdv ? kKdvDispersion : kBurgersViscosity;
}

void fill_fields(PdeProblem &problem, PeriodicStepper &stepper) {
  problem.u_x = stepper.derivative(problem.spectrum, 1);
  problem.u_xx = stepper.derivative(problem.spectrum, 2);
}

PdeProblem solve(PdeKind kind, int grid_size, double final_time, const SpectralSettings &settings) {
  if (grid_size < 256 || (grid_size & (grid_size - 1)) != 0) {
    throw ValidationError("spectral grid size must be a power of two >= 256, got " +
                          std::to_string(grid_size));
  }
  if (!(final_time >= 0.0)) throw ValidationError("final time must be nonnegative");

  PdeProblem problem;
  problem.kind = kind;
  problem.name = kind == PdeKind::kKdv ? "kdv" : "burgers";
  problem.grid_size = grid_size;
  problem.coefficient = coefficient_of(kind);
  problem.final_time = final_time;
  problem.x.resize(grid_size);
  Eigen::VectorXd initial(grid_size);
  for (int j = 0; j < grid_size; ++j) {
    const double x = static_cast<double>(j) / grid_size;
    problem.x(j) = x;
    initial(j) = kind == PdeKind::kKdv ? std::cos(kTwoPi * x) : std::sin(kTwoPi * x);
  }

  PeriodicStepper stepper(kind, problem.coefficient, grid_size);
  const Spectrum start = stepper.transform(initial);
  if (final_time == 0.0) {
    problem.u = initial;
    problem.spectrum = start;
    fill_fields(problem, stepper);
    return problem;
  }

  const double h = 1.0 / grid_size;
  const double peak = initial.cwiseAbs().maxCoeff();
  int steps = static_cast<int>(std::ceil(final_time / (settings.cfl * h / peak)));
  for (int attempt = 0; attempt <= settings.max_refinements; ++attempt, steps *= 2) {
    const double dt = final_time / steps;
    Spectrum u_hat = start;
    bool healthy = true;
    for (int s = 0; s < steps && healthy; ++s) {
      stepper.reset_max();
      u_hat = stepper.step(u_hat, dt);
      healthy = std::isfinite(stepper.max_abs()) && stepper.max_abs() * dt / h <= settings.max_cfl;
    }
    if (!healthy) continue;
    problem.time_step = dt;
    problem.steps = steps;
    problem.spectrum = std::move(u_hat);
    problem.u = stepper.derivative(problem.spectrum, 0);
    fill_fields(problem, stepper);
    return problem;
  }
  throw NumericalError(problem.name + " solver violated the CFL bound after " +
                       std::to_string(settings.max_refinements) + " time-step refinements");
}

}  // namespace

const Eigen::VectorXd &PdeProblem::field(int order) const {
  switch (order) {
    case 0: return u;
    case 1: return u_x;
    case 2: return u_xx;
    default:
      throw ValidationError("PDE truth is available for orders 0..2, got " + std::to_string(order));
  }
}

double PdeProblem::interpolate(double at, int order) const {
  if (order < 0) throw ValidationError("derivative order must be nonnegative");
  const int n = grid_size;
  Complex acc(0.0, 0.0);
  for (int m = 0; m < n; ++m) {
    if (m == n / 2) continue;
    const double k = kTwoPi * signed_mode(m, n);
    Complex factor(1.0, 0.0);
    for (int d = 0; d < order; ++d) factor *= Complex(0.0, k);
    acc += spectrum[static_cast<std::size_t>(m)] * factor * std::exp(Complex(0.0, k * at));
  }
  return acc.real() / n;
}

PdeProblem solve_kdv(int grid_size, double final_time, const SpectralSettings &settings) {
  return solve(PdeKind::kKdv, grid_size, final_time, settings);
}

PdeProblem solve_burgers(int grid_size, double final_time, const SpectralSettings &settings) {
  return solve(PdeKind::kBurgers, grid_size, final_time, settings);
}

PdeProblem advance(const PdeProblem &problem, double dt) {
  PeriodicStepper stepper(problem.kind, problem.coefficient, problem.grid_size);
  PdeProblem next = problem;
  next.final_time = problem.final_time + dt;
  next.spectrum = stepper.step(problem.spectrum, dt);
  next.u = stepper.derivative(next.spectrum, 0);
  fill_fields(next, stepper);
  return next;
}

}  // namespace agrf::datagen
