#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "agrf/types.hpp"

namespace agrf {

struct NelderMeadOptions {
  int max_evaluations = 2000;
  double diameter_tolerance = 1e-8;  ///< stop when every vertex is this close to the best
  double initial_step = 0.5;
};

template <typename Scalar>
struct NelderMeadResult {
  Vector<Scalar> argmin;
  Scalar minimum = std::numeric_limits<Scalar>::infinity();
  int evaluations = 0;
  bool converged = false;
};

/// Downhill simplex minimization. Non-finite objective values are treated as
/// +infinity so the simplex retreats from regions where the objective is undefined.
template <typename Scalar, typename Objective>
NelderMeadResult<Scalar> nelder_mead(Objective &&objective, const Vector<Scalar> &start,
                                     const NelderMeadOptions &options = {}) {
  const Index dim = start.size();
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  NelderMeadResult<Scalar> result;

  auto eval = [&](const Vector<Scalar> &p) {
    ++result.evaluations;
    const Scalar v = objective(p);
    return std::isfinite(static_cast<double>(v)) ? v : inf;
  };

  std::vector<Vector<Scalar>> simplex(static_cast<std::size_t>(dim) + 1, start);
  std::vector<Scalar> values(simplex.size());
  for (Index k = 0; k < dim; ++k) simplex[static_cast<std::size_t>(k) + 1](k) += Scalar(options.initial_step);
  for (std::size_t k = 0; k < simplex.size(); ++k) values[k] = eval(simplex[k]);

  std::vector<std::size_t> order(simplex.size());
  const auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Vector<Scalar>> s;
    std::vector<Scalar> v;
    s.reserve(simplex.size());
    v.reserve(simplex.size());
    for (const std::size_t k : order) {
      s.push_back(simplex[k]);
      v.push_back(values[k]);
    }
    simplex = std::move(s);
    values = std::move(v);
  };

  const std::size_t worst = simplex.size() - 1;
  while (true) {
    sort_simplex();
    Scalar diameter(0);
    for (std::size_t k = 1; k < simplex.size(); ++k) {
      diameter = std::max(diameter, (simplex[k] - simplex[0]).template lpNorm<Eigen::Infinity>());
    }
    if (diameter < Scalar(options.diameter_tolerance)) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= options.max_evaluations) break;

    Vector<Scalar> centroid = Vector<Scalar>::Zero(dim);
    for (std::size_t k = 0; k < worst; ++k) centroid += simplex[k];
    centroid /= Scalar(dim);

    const Vector<Scalar> reflected = centroid + (centroid - simplex[worst]);
    const Scalar f_reflected = eval(reflected);
    if (f_reflected < values[0]) {
      const Vector<Scalar> expanded = centroid + Scalar(2) * (centroid - simplex[worst]);
      const Scalar f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[worst - 1]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    const Vector<Scalar> contracted = outside
                                          ? Vector<Scalar>(centroid + Scalar(0.5) * (reflected - centroid))
                                          : Vector<Scalar>(centroid + Scalar(0.5) * (simplex[worst] - centroid));
    const Scalar f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    // shrink towards the best vertex
    for (std::size_t k = 1; k < simplex.size(); ++k) {
      simplex[k] = simplex[0] + Scalar(0.5) * (simplex[k] - simplex[0]);
      values[k] = eval(simplex[k]);
    }
  }
  result.argmin = simplex[0];
  result.minimum = values[0];
  return result;
}

}  // namespace agrf
