#pragma once

#include <string>

#include "agrf/types.hpp"

namespace agrf {

/// Coefficients of the probabilists' Hermite polynomials He_0 ... He_M.
///
/// Row m holds He_m in ascending powers of r. The family satisfies
///   d^m/dr^m exp(-r^2/2) = (-1)^m He_m(r) exp(-r^2/2),
/// which is what turns every mixed derivative of the squared exponential
/// kernel into a single polynomial evaluation.
template <typename Scalar>
class HermiteTable {
 public:
  explicit HermiteTable(int max_order = kDefaultMaxOrder) : max_order_(max_order) {
    if (max_order < 0) {
      throw ValidationError("Hermite table order must be nonnegative, got " +
                            std::to_string(max_order));
    }
    coefficients_ = Matrix<Scalar>::Zero(max_order + 1, max_order + 1);
    coefficients_(0, 0) = Scalar(1);
    if (max_order >= 1) coefficients_(1, 1) = Scalar(1);
    // He_{m+1}(r) = r He_m(r) - m He_{m-1}(r)
    for (int m = 1; m < max_order; ++m) {
      for (int k = 0; k <= m; ++k) coefficients_(m + 1, k + 1) += coefficients_(m, k);
      for (int k = 0; k < m; ++k) coefficients_(m + 1, k) -= Scalar(m) * coefficients_(m - 1, k);
    }
  }

  int max_order() const noexcept { return max_order_; }

  const Matrix<Scalar> &coefficients() const noexcept { return coefficients_; }

  /// He_m(r). Evaluated in r^2 over the nonzero parity coefficients so that
  /// evaluate(m, -r) == (-1)^m evaluate(m, r) holds bit for bit.
  Scalar evaluate(int m, Scalar r) const {
    if (m < 0 || m > max_order_) {
      throw CapacityError("Hermite order " + std::to_string(m) +
                          " exceeds table capacity " + std::to_string(max_order_));
    }
    const Scalar s = r * r;
    Scalar acc(0);
    for (int k = m; k >= 0; k -= 2) acc = acc * s + coefficients_(m, k);
    return (m % 2 == 1) ? acc * r : acc;
  }

 private:
  int max_order_;
  Matrix<Scalar> coefficients_;
};

}  // namespace agrf
