#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "agrf/kernel.hpp"
#include "agrf/types.hpp"

namespace agrf {

/// One datum: the order-th derivative of the observable sampled at x.
template <typename Scalar>
struct Observation {
  int order = 0;
  Scalar x{};
  Scalar value{};
};

/// Observations of the observable and its derivatives, grouped by order.
///
/// Rows are stacked by ascending order, then by the order they were given.
/// Every order 0..n has a block; blocks may be empty (missing data).
/// Each stacked row remembers its position in the input so that validation
/// messages can point back at it.
template <typename Scalar>
class ObservationSet {
 public:
  ObservationSet() = default;

  explicit ObservationSet(const std::vector<Observation<Scalar>> &rows) {
    if (rows.empty()) throw ValidationError("observation set is empty");
    int max_order = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto &row = rows[r];
      if (row.order < 0) {
        throw ValidationError("row " + std::to_string(r + 1) + ": negative derivative order " +
                              std::to_string(row.order));
      }
      if (!std::isfinite(static_cast<double>(row.x)) ||
          !std::isfinite(static_cast<double>(row.value))) {
        throw ValidationError("row " + std::to_string(r + 1) + ": non-finite location or value");
      }
      max_order = std::max(max_order, row.order);
    }
    blocks_.resize(static_cast<std::size_t>(max_order) + 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto &block = blocks_[static_cast<std::size_t>(rows[r].order)];
      block.x.push_back(rows[r].x);
      block.values.push_back(rows[r].value);
      block.source_rows.push_back(r);
    }
    Index offset = 0;
    for (auto &block : blocks_) {
      block.offset = offset;
      offset += static_cast<Index>(block.x.size());
    }
    size_ = offset;
  }

  /// Highest derivative order n; orders 0..n each own a (possibly empty) block.
  int max_order() const noexcept { return static_cast<int>(blocks_.size()) - 1; }
  Index size() const noexcept { return size_; }
  int num_orders() const noexcept { return static_cast<int>(blocks_.size()); }

  Index count(int order) const {
    return in_range(order) ? static_cast<Index>(block(order).x.size()) : 0;
  }
  /// Row of the first observation of this order in the stacked layout.
  Index offset(int order) const { return block(order).offset; }
  const std::vector<Scalar> &locations(int order) const { return block(order).x; }
  const std::vector<Scalar> &values(int order) const { return block(order).values; }
  /// 0-based position in the constructor input of stacked entry (order, j).
  std::size_t source_row(int order, Index j) const {
    return block(order).source_rows[static_cast<std::size_t>(j)];
  }

  /// Stacked (order, within-order index) for every row.
  std::vector<std::pair<int, Index>> index_map() const {
    std::vector<std::pair<int, Index>> map;
    map.reserve(static_cast<std::size_t>(size_));
    for (int i = 0; i < num_orders(); ++i) {
      for (Index j = 0; j < count(i); ++j) map.emplace_back(i, j);
    }
    return map;
  }

  /// Rows in stacked order.
  std::vector<Observation<Scalar>> rows() const {
    std::vector<Observation<Scalar>> out;
    out.reserve(static_cast<std::size_t>(size_));
    for (int i = 0; i < num_orders(); ++i) {
      for (std::size_t j = 0; j < block(i).x.size(); ++j) {
        out.push_back({i, block(i).x[j], block(i).values[j]});
      }
    }
    return out;
  }

  /// Throws ValidationError naming every pair of rows that share order and
  /// location. Such pairs make the noiseless Gram singular.
  void require_distinct() const {
    std::ostringstream message;
    bool found = false;
    for (int i = 0; i < num_orders(); ++i) {
      const auto &b = block(i);
      std::vector<std::size_t> idx(b.x.size());
      for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t l, std::size_t r) { return b.x[l] < b.x[r]; });
      for (std::size_t k = 1; k < idx.size(); ++k) {
        if (b.x[idx[k]] == b.x[idx[k - 1]]) {
          message << (found ? "; " : "") << "rows " << b.source_rows[idx[k - 1]] + 1 << " and "
                  << b.source_rows[idx[k]] + 1 << " (order " << i << ", x = " << b.x[idx[k]]
                  << ")";
          found = true;
        }
      }
    }
    if (found) {
      throw ValidationError("duplicate observations at the same order and location are not "
                            "allowed in noiseless mode: " +
                            message.str());
    }
  }

 private:
  struct Block {
    std::vector<Scalar> x;
    std::vector<Scalar> values;
    std::vector<std::size_t> source_rows;
    Index offset = 0;
  };

  bool in_range(int order) const noexcept { return order >= 0 && order < num_orders(); }
  const Block &block(int order) const {
    if (!in_range(order)) {
      throw ValidationError("no observation block for order " + std::to_string(order));
    }
    return blocks_[static_cast<std::size_t>(order)];
  }

  std::vector<Block> blocks_;
  Index size_ = 0;
};

/// Kernel amplitude a, length scale l and one noise intensity per order.
template <typename Scalar>
struct Hyperparameters {
  Scalar amplitude{1};
  Scalar length_scale{1};
  Vector<Scalar> noise;  ///< delta_0 .. delta_n; all zero in noiseless mode

  Scalar noise_for(int order) const {
    return (order >= 0 && order < noise.size()) ? noise(order) : Scalar(0);
  }

  void validate() const {
    if (!(amplitude > Scalar(0)) || !std::isfinite(static_cast<double>(amplitude)))
      throw ValidationError("amplitude must be positive and finite");
    if (!(length_scale > Scalar(0)) || !std::isfinite(static_cast<double>(length_scale)))
      throw ValidationError("length scale must be positive and finite");
    for (Index i = 0; i < noise.size(); ++i) {
      if (!(noise(i) >= Scalar(0)) || !std::isfinite(static_cast<double>(noise(i))))
        throw ValidationError("noise intensity for order " + std::to_string(i) +
                              " must be nonnegative and finite");
    }
  }

  SquaredExponentialKernel<Scalar> kernel(int max_order = kDefaultMaxOrder) const {
    return SquaredExponentialKernel<Scalar>(amplitude, length_scale, max_order);
  }
};

/// Query of the order-th derivative at x.
template <typename Scalar>
struct QuerySpec {
  Scalar x{};
  int order = 0;
};

/// Training covariance of the augmented field in stacked block layout.
template <typename Scalar>
struct BlockGram {
  Matrix<Scalar> matrix;
  std::vector<std::pair<int, Index>> index_map;
};

template <typename Scalar>
BlockGram<Scalar> assemble_gram(const ObservationSet<Scalar> &obs,
                                const SquaredExponentialKernel<Scalar> &kernel,
                                const Vector<Scalar> &noise = {}) {
  const Index size = obs.size();
  BlockGram<Scalar> gram;
  gram.matrix.resize(size, size);
  gram.index_map = obs.index_map();
  for (Index r = 0; r < size; ++r) {
    const auto [oi, ji] = gram.index_map[static_cast<std::size_t>(r)];
    const Scalar xi = obs.locations(oi)[static_cast<std::size_t>(ji)];
    for (Index c = r; c < size; ++c) {
      const auto [oj, jj] = gram.index_map[static_cast<std::size_t>(c)];
      const Scalar xj = obs.locations(oj)[static_cast<std::size_t>(jj)];
      const Scalar value = kernel.derivative(oi, oj, xi, xj);
      if (!std::isfinite(static_cast<double>(value))) {
        std::ostringstream message;
        message << "non-finite covariance between observation (order " << oi << ", x = " << xi
                << ") and (order " << oj << ", x = " << xj << ")";
        throw NumericalError(message.str());
      }
      gram.matrix(r, c) = value;
      gram.matrix(c, r) = value;
    }
  }
  if (noise.size() > 0) {
    for (Index r = 0; r < size; ++r) {
      const int order = gram.index_map[static_cast<std::size_t>(r)].first;
      const Scalar delta = order < noise.size() ? noise(order) : Scalar(0);
      gram.matrix(r, r) += delta * delta;
    }
  }
  return gram;
}

/// Gram of the augmented field; adds delta_i^2 to block (i, i) when noisy.
template <typename Scalar>
BlockGram<Scalar> assemble_gram(const ObservationSet<Scalar> &obs, const Hyperparameters<Scalar> &hp,
                                bool noisy, int max_order = kDefaultMaxOrder) {
  hp.validate();
  return assemble_gram(obs, hp.kernel(max_order), noisy ? hp.noise : Vector<Scalar>{});
}

/// Covariances between the query and every stacked observation. Noise never
/// enters cross terms.
template <typename Scalar>
Vector<Scalar> cross_vector(const ObservationSet<Scalar> &obs,
                            const SquaredExponentialKernel<Scalar> &kernel,
                            const QuerySpec<Scalar> &query) {
  Vector<Scalar> out(obs.size());
  Index row = 0;
  for (int i = 0; i < obs.num_orders(); ++i) {
    for (const Scalar x : obs.locations(i)) out(row++) = kernel.derivative(query.order, i, query.x, x);
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> cross_vector(const ObservationSet<Scalar> &obs, const Hyperparameters<Scalar> &hp,
                            const QuerySpec<Scalar> &query, int max_order = kDefaultMaxOrder) {
  return cross_vector(obs, hp.kernel(max_order), query);
}

/// Stacked values minus the matching mean derivatives.
template <typename Scalar>
Vector<Scalar> residual_vector(const ObservationSet<Scalar> &obs,
                               const PolynomialMean<Scalar> &mean) {
  Vector<Scalar> out(obs.size());
  Index row = 0;
  for (int i = 0; i < obs.num_orders(); ++i) {
    const auto &xs = obs.locations(i);
    const auto &vs = obs.values(i);
    for (std::size_t j = 0; j < xs.size(); ++j) out(row++) = vs[j] - mean.derivative(i, xs[j]);
  }
  return out;
}

/// Diagonal inflation schedule tried when a plain Cholesky factorization fails:
/// K_ii -> K_ii (1 + epsilon), epsilon = initial, initial*growth, ... <= final.
/// Each row is inflated relative to its own diagonal, so order-0 rows are not
/// swamped by the l^-2q scale of high-order rows.
struct JitterPolicy {
  double initial = 1e-12;
  double final = 1e-6;
  double growth = 10.0;
};

template <typename Scalar>
struct CholeskyFactor {
  Matrix<Scalar> lower;
  Scalar jitter{0};  ///< relative diagonal inflation epsilon that was applied

  Scalar log_determinant() const { return Scalar(2) * lower.diagonal().array().log().sum(); }

  Vector<Scalar> solve(const Vector<Scalar> &rhs) const {
    Vector<Scalar> out = lower.template triangularView<Eigen::Lower>().solve(rhs);
    lower.transpose().template triangularView<Eigen::Upper>().solveInPlace(out);
    return out;
  }

  /// L^{-1} rhs
  Vector<Scalar> half_solve(const Vector<Scalar> &rhs) const {
    return lower.template triangularView<Eigen::Lower>().solve(rhs);
  }
};

/// Cholesky factor of `gram`, escalating jitter per `policy` on failure.
/// A factorization also counts as failed when the reciprocal condition
/// estimate of the unit-diagonal scaled matrix is below n * epsilon: the
/// factor is then rounding noise even if every pivot came out positive.
/// Returns nullopt when even the largest jitter does not help.
template <typename Scalar>
std::optional<CholeskyFactor<Scalar>> factorize(const Matrix<Scalar> &gram,
                                                const JitterPolicy &policy = {}) {
  const auto attempt = [&](Scalar jitter) -> std::optional<CholeskyFactor<Scalar>> {
    const Vector<Scalar> diag = gram.diagonal().array() * (Scalar(1) + jitter);
    if (!(diag.array() > Scalar(0)).all()) return std::nullopt;
    const Vector<Scalar> scale = diag.array().sqrt();
    Matrix<Scalar> scaled = gram;
    scaled.diagonal() = diag;
    scaled = scale.cwiseInverse().asDiagonal() * scaled * scale.cwiseInverse().asDiagonal();
    const Eigen::LLT<Matrix<Scalar>> llt(scaled);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Scalar floor = static_cast<Scalar>(gram.rows()) * std::numeric_limits<Scalar>::epsilon();
    if (!(llt.rcond() >= floor)) return std::nullopt;
    Matrix<Scalar> lower = scale.asDiagonal() * Matrix<Scalar>(llt.matrixL());
    if (!lower.allFinite() || !(lower.diagonal().array() > Scalar(0)).all()) return std::nullopt;
    return CholeskyFactor<Scalar>{std::move(lower), jitter};
  };

  if (gram.size() == 0 || !gram.allFinite()) return std::nullopt;
  if (auto f = attempt(Scalar(0))) return f;
  for (double eps = policy.initial; eps <= policy.final * (1 + 1e-9); eps *= policy.growth) {
    if (auto f = attempt(Scalar(eps))) return f;
    if (policy.growth <= 1.0) break;
  }
  return std::nullopt;
}

}  // namespace agrf
