#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agrf/field.hpp"
#include "agrf/kernel.hpp"
#include "agrf/nelder_mead.hpp"
#include "agrf/types.hpp"

namespace agrf {

/// How measurement noise is modelled.
///  - kNoiseless: all delta_i = 0; the posterior interpolates the data.
///  - kOneDelta: one shared intensity delta_0 = ... = delta_n.
///  - kMultiDelta: an independent intensity per derivative order.
enum class NoiseMode { kNoiseless, kOneDelta, kMultiDelta };

inline bool is_noisy(NoiseMode mode) noexcept { return mode != NoiseMode::kNoiseless; }

inline std::string to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::kNoiseless: return "noiseless";
    case NoiseMode::kOneDelta: return "noisy-one-delta";
    case NoiseMode::kMultiDelta: return "noisy-multi-delta";
  }
  return "unknown";
}

inline NoiseMode parse_noise_mode(std::string_view text) {
  if (text == "noiseless") return NoiseMode::kNoiseless;
  if (text == "noisy-one-delta") return NoiseMode::kOneDelta;
  if (text == "noisy-multi-delta") return NoiseMode::kMultiDelta;
  throw ValidationError("unknown noise mode '" + std::string(text) +
                        "' (expected noiseless, noisy-one-delta or noisy-multi-delta)");
}

/// Multiplier of the posterior standard deviation for the central 95% band.
inline constexpr double kBandMultiplier = 1.96;

struct FitConfig {
  int restarts = 8;
  int max_evaluations = 2000;   ///< per restart
  double tolerance = 1e-8;      ///< simplex diameter in log-parameter space
  std::uint64_t seed = 0;
  JitterPolicy jitter;
  int max_order = kDefaultMaxOrder;
};

struct RestartSummary {
  double log_likelihood = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

struct FitReport {
  std::vector<RestartSummary> restarts;
  int best_restart = -1;
  int total_evaluations = 0;
};

template <typename Scalar>
struct Prediction {
  Scalar x{};
  int order = 0;
  Scalar mean{};
  Scalar variance{};      ///< clamped at zero
  Scalar raw_variance{};  ///< before clamping
  Scalar lower{};
  Scalar upper{};
  bool variance_warning = false;  ///< raw variance below -1e-6 a^2
};

/// Log marginal likelihood of the stacked data under the augmented field.
/// Returns -infinity when the (jittered) Gram cannot be factorized, which
/// the optimizer treats as a rejected point.
template <typename Scalar>
Scalar log_likelihood(const ObservationSet<Scalar> &obs, const PolynomialMean<Scalar> &mean,
                      const Hyperparameters<Scalar> &hp, bool noisy,
                      const JitterPolicy &jitter = {}, int max_order = kDefaultMaxOrder) {
  const Scalar undefined = -std::numeric_limits<Scalar>::infinity();
  BlockGram<Scalar> gram;
  try {
    gram = assemble_gram(obs, hp, noisy, max_order);
  } catch (const NumericalError &) {
    return undefined;
  }
  const auto factor = factorize(gram.matrix, jitter);
  if (!factor) return undefined;
  const Vector<Scalar> residual = residual_vector(obs, mean);
  const Vector<Scalar> whitened = factor->half_solve(residual);
  const Scalar size = static_cast<Scalar>(obs.size());
  const Scalar value = -Scalar(0.5) * size * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) -
                       Scalar(0.5) * factor->log_determinant() -
                       Scalar(0.5) * whitened.squaredNorm();
  return std::isfinite(static_cast<double>(value)) ? value : undefined;
}

/// Observations conditioned on fixed hyperparameters, ready for queries.
/// Immutable once built; queries are const and safe to run concurrently.
template <typename Scalar>
class FittedModel {
 public:
  FittedModel(ObservationSet<Scalar> obs, PolynomialMean<Scalar> mean, Hyperparameters<Scalar> hp,
              NoiseMode mode, JitterPolicy jitter = {}, int max_order = kDefaultMaxOrder)
      : obs_(std::move(obs)),
        mean_(std::move(mean)),
        hp_(std::move(hp)),
        mode_(mode),
        jitter_(jitter),
        kernel_(hp_.amplitude, hp_.length_scale, max_order) {
    if (hp_.noise.size() != obs_.num_orders()) {
      Vector<Scalar> resized = Vector<Scalar>::Zero(obs_.num_orders());
      const Index keep = std::min<Index>(resized.size(), hp_.noise.size());
      resized.head(keep) = hp_.noise.head(keep);
      hp_.noise = std::move(resized);
    }
    if (!is_noisy(mode_)) hp_.noise.setZero();
    hp_.validate();
    if (2 * obs_.max_order() > max_order) {
      throw CapacityError("data of derivative order " + std::to_string(obs_.max_order()) +
                          " needs kernel derivatives of order " +
                          std::to_string(2 * obs_.max_order()) + ", table capacity is " +
                          std::to_string(max_order));
    }
    const auto gram = assemble_gram(obs_, kernel_, is_noisy(mode_) ? hp_.noise : Vector<Scalar>{});
    auto factor = factorize(gram.matrix, jitter_);
    if (!factor) {
      throw NumericalError("Gram matrix is not positive definite even after jitter escalation");
    }
    factor_ = std::move(*factor);
    alpha_ = factor_.solve(residual_vector(obs_, mean_));
    const Vector<Scalar> whitened = factor_.half_solve(residual_vector(obs_, mean_));
    log_likelihood_ = -Scalar(0.5) * static_cast<Scalar>(obs_.size()) *
                          std::log(Scalar(2) * std::numbers::pi_v<Scalar>) -
                      Scalar(0.5) * factor_.log_determinant() - Scalar(0.5) * whitened.squaredNorm();
  }

  const ObservationSet<Scalar> &observations() const noexcept { return obs_; }
  const PolynomialMean<Scalar> &mean_function() const noexcept { return mean_; }
  const Hyperparameters<Scalar> &hyperparameters() const noexcept { return hp_; }
  const SquaredExponentialKernel<Scalar> &kernel() const noexcept { return kernel_; }
  NoiseMode mode() const noexcept { return mode_; }
  const JitterPolicy &jitter_policy() const noexcept { return jitter_; }
  int max_order() const noexcept { return kernel_.max_order(); }
  const CholeskyFactor<Scalar> &factor() const noexcept { return factor_; }
  const Vector<Scalar> &alpha() const noexcept { return alpha_; }
  Scalar log_likelihood() const noexcept { return log_likelihood_; }
  const FitReport &report() const noexcept { return report_; }
  void set_report(FitReport report) { report_ = std::move(report); }

  /// Highest derivative order the kernel table can answer for this data.
  int max_query_order() const noexcept {
    return std::min(kernel_.max_order() / 2, kernel_.max_order() - obs_.max_order());
  }

  Prediction<Scalar> posterior(const QuerySpec<Scalar> &query) const {
    if (query.order < 0 || query.order > max_query_order()) {
      throw CapacityError("query order " + std::to_string(query.order) +
                          " is not supported (kernel table order " +
                          std::to_string(kernel_.max_order()) + ", data order " +
                          std::to_string(obs_.max_order()) + ")");
    }
    const Vector<Scalar> cross = cross_vector(obs_, kernel_, query);
    const Vector<Scalar> whitened = factor_.half_solve(cross);
    Prediction<Scalar> out;
    out.x = query.x;
    out.order = query.order;
    out.mean = mean_.derivative(query.order, query.x) + cross.dot(alpha_);
    Scalar prior = kernel_.derivative(query.order, query.order, query.x, query.x);
    if (is_noisy(mode_)) {
      const Scalar delta = hp_.noise_for(query.order);
      prior += delta * delta;
    }
    out.raw_variance = prior - whitened.squaredNorm();
    out.variance = std::max(out.raw_variance, Scalar(0));
    out.variance_warning =
        out.raw_variance < -Scalar(1e-6) * hp_.amplitude * hp_.amplitude;
    const Scalar half_width = Scalar(kBandMultiplier) * std::sqrt(out.variance);
    out.lower = out.mean - half_width;
    out.upper = out.mean + half_width;
    return out;
  }

 private:
  ObservationSet<Scalar> obs_;
  PolynomialMean<Scalar> mean_;
  Hyperparameters<Scalar> hp_;
  NoiseMode mode_;
  JitterPolicy jitter_;
  SquaredExponentialKernel<Scalar> kernel_;
  CholeskyFactor<Scalar> factor_;
  Vector<Scalar> alpha_;
  Scalar log_likelihood_{};
  FitReport report_;
};

template <typename Scalar>
Prediction<Scalar> posterior(const FittedModel<Scalar> &model, const QuerySpec<Scalar> &query) {
  return model.posterior(query);
}

/// One prediction per (order, grid point), order-major.
template <typename Scalar>
std::vector<Prediction<Scalar>> predict_curve(const FittedModel<Scalar> &model,
                                              std::span<const Scalar> grid,
                                              std::span<const int> orders) {
  std::vector<Prediction<Scalar>> out;
  if (orders.empty()) return out;
  if (grid.empty()) throw ValidationError("prediction grid is empty");
  out.reserve(grid.size() * orders.size());
  for (const int q : orders) {
    for (const Scalar x : grid) out.push_back(model.posterior({x, q}));
  }
  return out;
}

namespace detail {

/// Scale of a sample: standard deviation, else largest magnitude, else 1.
template <typename Scalar>
Scalar spread(const std::vector<Scalar> &values) {
  if (values.empty()) return Scalar(1);
  Scalar mean(0);
  Scalar peak(0);
  for (const Scalar v : values) {
    mean += v;
    peak = std::max(peak, Scalar(std::abs(v)));
  }
  mean /= static_cast<Scalar>(values.size());
  Scalar var(0);
  for (const Scalar v : values) var += (v - mean) * (v - mean);
  var /= static_cast<Scalar>(values.size());
  if (var > Scalar(0) && values.size() > 1) return std::sqrt(var);
  return peak > Scalar(0) ? peak : Scalar(1);
}

/// Maps the optimizer's log-space vector onto hyperparameters and back.
template <typename Scalar>
struct ParameterLayout {
  NoiseMode mode;
  int num_orders;
  std::vector<int> noisy_orders;  ///< orders whose delta is free (multi-delta)

  Index dimension() const {
    switch (mode) {
      case NoiseMode::kNoiseless: return 2;
      case NoiseMode::kOneDelta: return 3;
      case NoiseMode::kMultiDelta: return 2 + static_cast<Index>(noisy_orders.size());
    }
    return 2;
  }

  Hyperparameters<Scalar> unpack(const Vector<Scalar> &theta) const {
    Hyperparameters<Scalar> hp;
    hp.amplitude = std::exp(theta(0));
    hp.length_scale = std::exp(theta(1));
    hp.noise = Vector<Scalar>::Zero(num_orders);
    if (mode == NoiseMode::kOneDelta) {
      hp.noise.setConstant(std::exp(theta(2)));
    } else if (mode == NoiseMode::kMultiDelta) {
      for (std::size_t k = 0; k < noisy_orders.size(); ++k) {
        hp.noise(noisy_orders[k]) = std::exp(theta(2 + static_cast<Index>(k)));
      }
    }
    return hp;
  }
};

}  // namespace detail

/// Maximum-likelihood hyperparameters by multi-start Nelder-Mead over
/// (log a, log l, log delta...). Restart points are drawn log-uniformly from
///   a in [0.01 s_y, 100 s_y], l in [0.01 s_x, 10 s_x], delta_i in [1e-4 s_i, s_i]
/// with s_y, s_i the per-order value spreads and s_x the input range. The
/// search is confined to a box two decades wider than the draw ranges.
/// Ties between restarts go to the lowest restart index.
template <typename Scalar>
FittedModel<Scalar> fit(const ObservationSet<Scalar> &obs, const PolynomialMean<Scalar> &mean,
                        NoiseMode mode, const FitConfig &config = {}) {
  if (obs.size() < 1) throw ValidationError("cannot fit an empty observation set");
  if (config.restarts < 1) throw ValidationError("at least one optimizer restart is required");
  if (!is_noisy(mode)) obs.require_distinct();
  if (2 * obs.max_order() > config.max_order) {
    throw CapacityError("data of derivative order " + std::to_string(obs.max_order()) +
                        " exceeds kernel table capacity " + std::to_string(config.max_order));
  }

  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  for (int i = 0; i < obs.num_orders(); ++i) {
    for (const Scalar x : obs.locations(i)) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  const Scalar s_x = hi > lo ? hi - lo : Scalar(1);
  const Scalar s_y = obs.count(0) > 0 ? detail::spread(obs.values(0)) : Scalar(1);

  detail::ParameterLayout<Scalar> layout{mode, obs.num_orders(), {}};
  std::vector<Scalar> noise_scales;
  for (int i = 0; i < obs.num_orders(); ++i) {
    if (obs.count(i) == 0) continue;
    layout.noisy_orders.push_back(i);
    noise_scales.push_back(detail::spread(obs.values(i)));
  }
  Scalar shared_scale(0);
  for (const Scalar s : noise_scales) shared_scale += std::log(s);
  shared_scale = std::exp(shared_scale / static_cast<Scalar>(noise_scales.size()));

  const Index dim = layout.dimension();
  Vector<Scalar> draw_lo(dim), draw_hi(dim);
  draw_lo(0) = std::log(Scalar(0.01) * s_y);
  draw_hi(0) = std::log(Scalar(100) * s_y);
  draw_lo(1) = std::log(Scalar(0.01) * s_x);
  draw_hi(1) = std::log(Scalar(10) * s_x);
  if (mode == NoiseMode::kOneDelta) {
    draw_lo(2) = std::log(Scalar(1e-4) * shared_scale);
    draw_hi(2) = std::log(shared_scale);
  } else if (mode == NoiseMode::kMultiDelta) {
    for (std::size_t k = 0; k < noise_scales.size(); ++k) {
      draw_lo(2 + static_cast<Index>(k)) = std::log(Scalar(1e-4) * noise_scales[k]);
      draw_hi(2 + static_cast<Index>(k)) = std::log(noise_scales[k]);
    }
  }
  const Scalar margin = std::log(Scalar(100));
  const Vector<Scalar> box_lo = draw_lo.array() - margin;
  const Vector<Scalar> box_hi = draw_hi.array() + margin;

  const bool noisy = is_noisy(mode);
  auto objective = [&](const Vector<Scalar> &theta) -> Scalar {
    if ((theta.array() < box_lo.array()).any() || (theta.array() > box_hi.array()).any()) {
      return std::numeric_limits<Scalar>::infinity();
    }
    return -log_likelihood(obs, mean, layout.unpack(theta), noisy, config.jitter,
                           config.max_order);
  };

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NelderMeadOptions options;
  options.max_evaluations = config.max_evaluations;
  options.diameter_tolerance = config.tolerance;

  FitReport report;
  Vector<Scalar> best_theta;
  Scalar best_value = -std::numeric_limits<Scalar>::infinity();
  for (int restart = 0; restart < config.restarts; ++restart) {
    Vector<Scalar> start(dim);
    for (Index k = 0; k < dim; ++k) {
      start(k) = draw_lo(k) + Scalar(unit(rng)) * (draw_hi(k) - draw_lo(k));
    }
    const auto result = nelder_mead<Scalar>(objective, start, options);
    RestartSummary summary;
    summary.evaluations = result.evaluations;
    summary.converged = result.converged;
    summary.log_likelihood = static_cast<double>(-result.minimum);
    report.total_evaluations += result.evaluations;
    if (std::isfinite(summary.log_likelihood) && -result.minimum > best_value) {
      best_value = -result.minimum;
      best_theta = result.argmin;
      report.best_restart = restart;
    }
    report.restarts.push_back(summary);
  }
  if (report.best_restart < 0) {
    throw NumericalError("hyperparameter fitting failed: no restart reached a finite likelihood");
  }
  FittedModel<Scalar> model(obs, mean, layout.unpack(best_theta), mode, config.jitter,
                            config.max_order);
  model.set_report(std::move(report));
  return model;
}

}  // namespace agrf
