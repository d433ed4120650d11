#pragma once

#include <cmath>

#include "gril/augment.hpp"
#include "gril/data.hpp"
#include "gril/error.hpp"
#include "gril/penalty.hpp"

namespace gril {

struct CoordinateDescentOptions {
  double tol = 1e-10;
  Index max_sweeps = 100000;
};

struct CoordinateDescentResult {
  Vector beta;
  Index sweeps = 0;
};

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// Cyclic coordinate descent on b'Hb - 2 c'b + lambda1 sum_j w_j |b_j|.
/// Stops once the largest coordinate change in a sweep is below `tol`.
/// `start`, when non-empty, is used as the initial iterate.
inline CoordinateDescentResult coordinate_descent_gram(const Matrix& h, const Vector& c, const Vector& weights,
                                                       double lambda1,
                                                       const CoordinateDescentOptions& options = {},
                                                       const Vector& start = Vector()) {
  const Index p = h.rows();
  if (h.cols() != p || c.size() != p || weights.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "coordinate descent inputs disagree in size");
  }
  if (!(lambda1 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda1 must be nonnegative");
  CoordinateDescentResult out;
  out.beta = start.size() == p ? start : Vector::Zero(p);
  for (Index j = 0; j < p; ++j) {
    if (!std::isfinite(weights[j])) out.beta[j] = 0.0;
  }
  Vector hb = h * out.beta;
  for (Index sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double hjj = h(j, j);
      const double old = out.beta[j];
      double next = 0.0;
      if (hjj > 0.0 && std::isfinite(weights[j])) {
        const double z = c[j] - hb[j] + hjj * old;
        next = soft_threshold(z, 0.5 * lambda1 * weights[j]) / hjj;
      }
      const double delta = next - old;
      if (delta != 0.0) {
        hb += delta * h.col(j);
        out.beta[j] = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    out.sweeps = sweep;
    if (max_change < options.tol) return out;
  }
  throw Error(ErrorCode::NoConvergence, "coordinate descent did not converge");
}

/// Solves the weighted lasso on an augmented problem at a single lambda1.
inline CoordinateDescentResult coordinate_descent_solve(const AugmentedProblem& problem, double lambda1,
                                                        const CoordinateDescentOptions& options = {}) {
  return coordinate_descent_gram(problem.gram, problem.xty, problem.weights, lambda1, options);
}

/// Minimizes ||y - x b||^2 + lambda1 sum_j w_j |b_j| + lambda2 b'Qb directly,
/// with H = x'x + lambda2 Q. Never forms the stacked system.
inline CoordinateDescentResult coordinate_descent_direct(DesignView design, const Matrix& q, const Vector& weights,
                                                         double lambda1, double lambda2,
                                                         const CoordinateDescentOptions& options = {}) {
  if (q.rows() != design.p() || q.cols() != design.p()) {
    throw Error(ErrorCode::DimensionMismatch, "penalty size differs from number of predictors");
  }
  const Matrix h = design.x.transpose() * design.x + lambda2 * q;
  const Vector c = design.x.transpose() * design.y;
  return coordinate_descent_gram(h, c, weights, lambda1, options);
}

}  // namespace gril
