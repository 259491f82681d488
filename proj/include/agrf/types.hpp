#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace agrf {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Default highest derivative order the kernel tables are built for.
/// Order-n data needs covariance derivatives up to 2n, so 8 covers n = 4.
inline constexpr int kDefaultMaxOrder = 8;

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorCategory : int {
  kParse = 2,
  kValidation = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string &what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string &what) : Error(ErrorCategory::kParse, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string &what)
      : Error(ErrorCategory::kValidation, what) {}
};

/// Requested derivative order exceeds what a kernel table was built for.
class CapacityError : public ValidationError {
 public:
  explicit CapacityError(const std::string &what) : ValidationError(what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string &what)
      : Error(ErrorCategory::kNumerical, what) {}
};

}  // namespace agrf
