#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "agrf/hermite.hpp"
#include "agrf/types.hpp"

namespace agrf {

/// k(x, x') = a^2 exp(-(x - x')^2 / (2 l^2)) together with its mixed
/// partial derivatives of any order up to the Hermite table capacity.
template <typename Scalar>
class SquaredExponentialKernel {
 public:
  SquaredExponentialKernel(Scalar amplitude, Scalar length_scale,
                           int max_order = kDefaultMaxOrder)
      : amplitude_(amplitude), length_scale_(length_scale), table_(max_order) {
    if (!(amplitude > Scalar(0)) || !std::isfinite(static_cast<double>(amplitude))) {
      throw ValidationError("kernel amplitude must be positive and finite");
    }
    if (!(length_scale > Scalar(0)) || !std::isfinite(static_cast<double>(length_scale))) {
      throw ValidationError("kernel length scale must be positive and finite");
    }
  }

  Scalar amplitude() const noexcept { return amplitude_; }
  Scalar length_scale() const noexcept { return length_scale_; }
  int max_order() const noexcept { return table_.max_order(); }
  const HermiteTable<Scalar> &table() const noexcept { return table_; }

  Scalar operator()(Scalar x, Scalar x_prime) const { return derivative(0, 0, x, x_prime); }

  /// d^{i+j} k / dx^i dx'^j at (x, x').
  ///
  /// With r = (x - x') / l this is a^2 (-1)^i l^{-(i+j)} He_{i+j}(r) exp(-r^2/2).
  /// Swapping (i, x) with (j, x') flips r and the sign exactly, so the result
  /// is symmetric bit for bit.
  Scalar derivative(int i, int j, Scalar x, Scalar x_prime) const {
    if (i < 0 || j < 0) {
      throw ValidationError("derivative orders must be nonnegative");
    }
    const int total = i + j;
    if (total > table_.max_order()) {
      throw CapacityError("kernel derivative order " + std::to_string(i) + "+" +
                          std::to_string(j) + " exceeds Hermite table capacity " +
                          std::to_string(table_.max_order()));
    }
    using std::exp;
    const Scalar r = (x - x_prime) / length_scale_;
    Scalar scale(1);
    for (int k = 0; k < total; ++k) scale *= length_scale_;
    const Scalar value =
        amplitude_ * amplitude_ * table_.evaluate(total, r) * exp(-r * r / Scalar(2)) / scale;
    return (i % 2 == 1) ? -value : value;
  }

 private:
  Scalar amplitude_;
  Scalar length_scale_;
  HermiteTable<Scalar> table_;
};

template <typename Scalar>
Scalar kernel_derivative(const SquaredExponentialKernel<Scalar> &kernel, int i, int j, Scalar x,
                         Scalar x_prime) {
  return kernel.derivative(i, j, x, x_prime);
}

/// Polynomial prior mean m(x) = c_0 + c_1 x + ... + c_d x^d.
/// No coefficients means the zero mean.
template <typename Scalar>
class PolynomialMean {
 public:
  PolynomialMean() = default;
  explicit PolynomialMean(std::vector<Scalar> coefficients)
      : coefficients_(std::move(coefficients)) {}

  const std::vector<Scalar> &coefficients() const noexcept { return coefficients_; }
  bool is_zero() const noexcept { return coefficients_.empty(); }

  Scalar operator()(Scalar x) const { return derivative(0, x); }

  /// Exact d^i m / dx^i; identically zero once i exceeds the degree.
  Scalar derivative(int i, Scalar x) const {
    if (i < 0) throw ValidationError("derivative order must be nonnegative");
    const int size = static_cast<int>(coefficients_.size());
    Scalar acc(0);
    for (int k = size - 1; k >= i; --k) {
      Scalar falling(1);
      for (int f = 0; f < i; ++f) falling *= Scalar(k - f);
      acc = acc * x + coefficients_[static_cast<std::size_t>(k)] * falling;
    }
    return acc;
  }

 private:
  std::vector<Scalar> coefficients_;
};

template <typename Scalar>
Scalar mean_derivative(const PolynomialMean<Scalar> &mean, int i, Scalar x) {
  return mean.derivative(i, x);
}

}  // namespace agrf
