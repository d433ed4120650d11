#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gril/augment.hpp"
#include "gril/data.hpp"
#include "gril/error.hpp"

namespace gril {

struct PathOptions {
  /// Path stops at lambda1_min_ratio * lambda_max unless `lambda1_stop` >= 0.
  double lambda1_min_ratio = 1e-4;
  /// Absolute lambda1 at which to stop; negative means "use the ratio".
  double lambda1_stop = -1.0;
  /// 0 selects the default of 50 * p.
  Index max_steps = 0;
  /// Candidates whose join times differ by less than this (relative) are
  /// considered tied; the lowest index joins first.
  double tie_tol = 1e-12;
  /// A variable is refused when its Cholesky pivot^2 falls below
  /// rank_tol * its Gram diagonal.
  double rank_tol = 1e-10;
};

/// Piecewise-linear lasso path. Column k of `coefs` is the solution at
/// `breakpoints[k]`; breakpoints are strictly decreasing and the first one
/// is lambda_max, where every coefficient is zero.
struct PathSolution {
  std::vector<double> breakpoints;
  Matrix coefs;
  double lambda2 = 0.0;
  Vector weights;
  /// Largest active set held on any segment of the path.
  Index max_active = 0;

  Index size() const { return static_cast<Index>(breakpoints.size()); }
  Index p() const { return coefs.rows(); }
  double lambda_max() const { return breakpoints.front(); }
  double lambda_min() const { return breakpoints.back(); }

  /// Linear interpolation between breakpoints; values beyond the path end
  /// return the end point.
  Vector coef_at(double lambda1) const {
    if (lambda1 >= breakpoints.front()) return coefs.col(0);
    if (lambda1 <= breakpoints.back()) return coefs.col(size() - 1);
    const auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), lambda1,
                                     [](double bp, double value) { return bp > value; });
    const Index hi = static_cast<Index>(it - breakpoints.begin());
    const Index lo = hi - 1;
    if (breakpoints[hi] == lambda1) return coefs.col(hi);
    const double t = (breakpoints[lo] - lambda1) / (breakpoints[lo] - breakpoints[hi]);
    return (1.0 - t) * coefs.col(lo) + t * coefs.col(hi);
  }
};

namespace detail {

/// Cholesky factor of G[active, active], grown one column at a time.
class ActiveCholesky {
 public:
  explicit ActiveCholesky(const Matrix& gram) : gram_(gram), l_(gram.rows(), gram.rows()) {}

  Index size() const { return static_cast<Index>(order_.size()); }
  const std::vector<Index>& order() const { return order_; }

  bool add(Index j, double rank_tol) {
    const Index k = size();
    Vector g(k);
    for (Index i = 0; i < k; ++i) g[i] = gram_(order_[static_cast<std::size_t>(i)], j);
    Vector l = g;
    if (k > 0) l = l_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(g);
    const double diag = gram_(j, j);
    const double pivot2 = diag - l.squaredNorm();
    if (!(diag > 0.0) || !(pivot2 > rank_tol * diag)) return false;
    if (k > 0) l_.block(k, 0, 1, k) = l.transpose();
    l_(k, k) = std::sqrt(pivot2);
    order_.push_back(j);
    return true;
  }

  void remove_at(Index pos, double rank_tol) {
    std::vector<Index> keep = order_;
    keep.erase(keep.begin() + pos);
    order_.clear();
    for (Index j : keep) {
      if (!add(j, rank_tol)) {
        throw Error(ErrorCode::DegenerateStep, "active Gram lost rank after dropping a variable");
      }
    }
  }

  Vector solve(const Vector& rhs) const {
    const Index k = size();
    const auto l = l_.topLeftCorner(k, k).triangularView<Eigen::Lower>();
    Vector z = l.solve(rhs);
    return l.transpose().solve(z);
  }

 private:
  const Matrix& gram_;
  Matrix l_;
  std::vector<Index> order_;
};

}  // namespace detail

/// LARS with the lasso modification on the augmented problem, for the
/// objective ||y_aug - x_aug b||^2 + lambda1 * sum_j w_j |b_j|.
///
/// Columns are rescaled by 1/w_j, the unit-weight path is traced, and
/// coefficients are mapped back (b_j = b**_j / w_j). Columns with infinite
/// weight never enter. With un-normalized squared loss, lambda1 equals
/// twice the common absolute correlation of the active set.
inline PathSolution lars_lasso_path(const AugmentedProblem& problem, const PathOptions& options = {}) {
  const Index p = problem.p();
  const Vector& weights = problem.weights;
  if (weights.size() != p) throw Error(ErrorCode::DimensionMismatch, "weights length differs from p");

  std::vector<Index> cols;
  for (Index j = 0; j < p; ++j) {
    const double w = weights[j];
    if (std::isnan(w) || !(w > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "weights must be positive (or +inf)");
    }
    if (std::isfinite(w)) cols.push_back(j);
  }
  const Index m = static_cast<Index>(cols.size());

  PathSolution path;
  path.lambda2 = problem.lambda2;
  path.weights = weights;

  std::vector<Vector> recorded;
  auto record = [&](double lambda, const Vector& beta_scaled) {
    Vector full = Vector::Zero(p);
    for (Index i = 0; i < m; ++i) {
      const Index j = cols[static_cast<std::size_t>(i)];
      full[j] = beta_scaled[i] / weights[j];
    }
    if (!path.breakpoints.empty() && !(lambda < path.breakpoints.back())) {
      recorded.back() = std::move(full);
      return;
    }
    path.breakpoints.push_back(lambda);
    recorded.push_back(std::move(full));
  };
  auto finish = [&]() {
    path.coefs.resize(p, static_cast<Index>(recorded.size()));
    for (std::size_t k = 0; k < recorded.size(); ++k) path.coefs.col(static_cast<Index>(k)) = recorded[k];
    return path;
  };

  if (m == 0) {
    record(0.0, Vector::Zero(0));
    return finish();
  }

  Vector scale(m);
  for (Index i = 0; i < m; ++i) scale[i] = 1.0 / weights[cols[static_cast<std::size_t>(i)]];
  Matrix gram(m, m);
  Vector corr(m);
  for (Index a = 0; a < m; ++a) {
    corr[a] = problem.xty[cols[static_cast<std::size_t>(a)]] * scale[a];
    for (Index b = 0; b < m; ++b) {
      gram(a, b) = problem.gram(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]) *
                   scale[a] * scale[b];
    }
  }
  if (!gram.allFinite() || !corr.allFinite()) {
    throw Error(ErrorCode::NonFinite, "scaled problem is not finite");
  }

  Vector beta = Vector::Zero(m);
  double big_c = corr.cwiseAbs().maxCoeff();
  record(2.0 * big_c, beta);
  if (!(big_c > 0.0)) return finish();

  double stop_c = options.lambda1_stop >= 0.0 ? 0.5 * options.lambda1_stop
                                               : options.lambda1_min_ratio * big_c;
  if (stop_c >= big_c) return finish();

  const Index max_steps = options.max_steps > 0 ? options.max_steps : 50 * std::max<Index>(m, 1);
  std::vector<char> active(static_cast<std::size_t>(m), 0);
  std::vector<char> ignored(static_cast<std::size_t>(m), 0);
  std::vector<double> signs(static_cast<std::size_t>(m), 0.0);
  detail::ActiveCholesky chol(gram);

  // First entrant: largest absolute correlation, lowest index on ties.
  Index pending = -1;
  for (Index j = 0; j < m; ++j) {
    if (std::abs(corr[j]) >= big_c * (1.0 - options.tie_tol)) {
      pending = j;
      break;
    }
  }

  Index just_dropped = -1;
  double dropped_sign = 0.0;
  Index steps = 0;
  Index stalled = 0;
  while (true) {
    if (pending >= 0) {
      const auto pj = static_cast<std::size_t>(pending);
      if (chol.add(pending, options.rank_tol)) {
        active[pj] = 1;
        signs[pj] = corr[pending] >= 0.0 ? 1.0 : -1.0;
      } else {
        ignored[pj] = 1;
      }
      pending = -1;
    }
    const Index k = chol.size();
    path.max_active = std::max(path.max_active, k);

    Vector direction = Vector::Zero(0);
    Vector along = Vector::Zero(m);
    if (k > 0) {
      Vector s(k);
      for (Index i = 0; i < k; ++i) s[i] = signs[static_cast<std::size_t>(chol.order()[static_cast<std::size_t>(i)])];
      direction = chol.solve(s);
      for (Index i = 0; i < k; ++i) along += gram.col(chol.order()[static_cast<std::size_t>(i)]) * direction[i];
    }

    double gamma_join = std::numeric_limits<double>::infinity();
    Index join_idx = -1;
    for (Index j = 0; j < m; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (active[sj] || ignored[sj]) continue;
      double g = std::numeric_limits<double>::infinity();
      const double lo = 1.0 - along[j];
      const double hi = 1.0 + along[j];
      // A variable that just left may only come back with the opposite sign.
      const bool skip_pos = j == just_dropped && dropped_sign > 0.0;
      const bool skip_neg = j == just_dropped && dropped_sign < 0.0;
      if (!skip_pos && lo > 1e-14) g = std::min(g, std::max(0.0, (big_c - corr[j]) / lo));
      if (!skip_neg && hi > 1e-14) g = std::min(g, std::max(0.0, (big_c + corr[j]) / hi));
      // Strict improvement beyond the tie tolerance; ties keep the lower index.
      if (join_idx < 0 || g < gamma_join - options.tie_tol * std::max(1.0, gamma_join)) {
        gamma_join = g;
        join_idx = j;
      }
    }

    double gamma_drop = std::numeric_limits<double>::infinity();
    Index drop_pos = -1;
    for (Index i = 0; i < k; ++i) {
      const Index j = chol.order()[static_cast<std::size_t>(i)];
      if (direction[i] == 0.0 || beta[j] == 0.0) continue;
      const double g = -beta[j] / direction[i];
      if (g > 0.0 && g < gamma_drop) {
        gamma_drop = g;
        drop_pos = i;
      }
    }

    const double gamma_end = big_c - stop_c;
    double gamma = gamma_end;
    enum class Event { End, Join, Drop } event = Event::End;
    if (k == 0 && join_idx < 0) {
      // Nothing can enter: every remaining column is rank-deficient.
      record(2.0 * stop_c, beta);
      break;
    }
    if (gamma_join < gamma) {
      gamma = gamma_join;
      event = Event::Join;
    }
    if (gamma_drop < gamma) {
      gamma = gamma_drop;
      event = Event::Drop;
    }
    for (Index i = 0; i < k; ++i) {
      const Index j = chol.order()[static_cast<std::size_t>(i)];
      beta[j] += gamma * direction[i];
    }
    corr -= gamma * along;
    big_c = event == Event::End ? stop_c : big_c - gamma;
    for (Index i = 0; i < k; ++i) {
      const Index j = chol.order()[static_cast<std::size_t>(i)];
      corr[j] = signs[static_cast<std::size_t>(j)] * big_c;
    }
    just_dropped = -1;

    if (event == Event::End) {
      record(2.0 * big_c, beta);
      break;
    }
    if (event == Event::Drop) {
      const Index j = chol.order()[static_cast<std::size_t>(drop_pos)];
      beta[j] = 0.0;
      active[static_cast<std::size_t>(j)] = 0;
      chol.remove_at(drop_pos, options.rank_tol);
      std::fill(ignored.begin(), ignored.end(), 0);
      just_dropped = j;
      dropped_sign = signs[static_cast<std::size_t>(j)];
    } else {
      pending = join_idx;
    }
    record(2.0 * big_c, beta);

    stalled = gamma > 0.0 ? 0 : stalled + 1;
    if (stalled > m + 2) throw Error(ErrorCode::DegenerateStep, "path made no progress");
    if (++steps > max_steps) throw Error(ErrorCode::MaxStepsExceeded, "LARS step limit reached");
  }
  return finish();
}

}  // namespace gril
