#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gril/fit.hpp"
#include "gril/rng.hpp"

namespace gril {

enum class Selector { BIC, KFoldCV };

inline const char* to_string(Selector s) noexcept { return s == Selector::BIC ? "bic" : "cv"; }

struct TuningConfig {
  std::vector<double> lambda2_grid{0.0, 0.01, 0.1, 1.0, 10.0, 100.0};
  Selector selector = Selector::BIC;
  int folds = 10;
  /// Number of path breakpoints scored per lambda2 (evenly thinned by
  /// index); 0 scores every breakpoint.
  Index lambda1_grid_size = 0;
  std::uint64_t seed = 0;
  /// Adaptive exponent; derived from (n, p) when unset.
  std::optional<double> gamma_override;
  WeightScheme weight_scheme = WeightScheme::PowerLaw;
  FitOptions fit;
};

inline void validate(const TuningConfig& config) {
  if (config.lambda2_grid.empty()) throw Error(ErrorCode::InvalidArgument, "lambda2 grid is empty");
  for (double l2 : config.lambda2_grid) {
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(ErrorCode::InvalidArgument, "lambda2 values must be >= 0");
  }
  if (config.selector == Selector::KFoldCV && config.folds < 2) {
    throw Error(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds");
  }
  if (config.lambda1_grid_size < 0 || config.lambda1_grid_size == 1) {
    throw Error(ErrorCode::InvalidArgument, "lambda1 grid size must be 0 or at least 2");
  }
}

struct ScoreEntry {
  double lambda2 = 0.0;
  double lambda1 = 0.0;
  double score = 0.0;
  std::size_t df = 0;
  bool adaptive = false;
};

struct FailedCell {
  double lambda2 = 0.0;
  bool adaptive = false;
  std::string reason;
};

struct TuningResult {
  double best_lambda1 = 0.0;
  double best_lambda2 = 0.0;
  /// Exponent used for the adaptive weights (0 for a plain Gril tuning).
  double gamma = 0.0;
  Selector selector_used = Selector::BIC;
  std::vector<ScoreEntry> score_table;
  std::vector<FailedCell> failed;
  /// Fit at the selected tuning parameters.
  FitReport fit;
  /// For adaptive tuning, the Gril fit the weights came from.
  std::optional<FitReport> initial_fit;
};

using PenaltyBuilder = std::function<PenaltyMatrix(const StandardizedDesign&)>;

/// floor(2 nu / (1 - nu)) + 1 with nu = log p / log n clamped to [0, 1 - 1e-6].
inline double gamma_from_dims(Index n, Index p) {
  if (n < 2 || p < 1) throw Error(ErrorCode::InvalidArgument, "gamma_from_dims needs n >= 2 and p >= 1");
  double nu = std::log(static_cast<double>(p)) / std::log(static_cast<double>(n));
  nu = std::clamp(nu, 0.0, 1.0 - 1e-6);
  // The small offset keeps exact ratios such as 2 from flooring to 1.
  return std::floor(2.0 * nu / (1.0 - nu) + 1e-9) + 1.0;
}

inline double bic_score(Index n, double rss, std::size_t df) {
  const double nn = static_cast<double>(n);
  const double r = std::max(rss, std::numeric_limits<double>::min());
  return nn * std::log(r / nn) + std::log(nn) * static_cast<double>(df);
}

inline double bic_score(DesignView design, const FitReport& fit) {
  return bic_score(design.n(), (design.y - design.x * fit.beta.beta).squaredNorm(), fit.beta.df());
}

/// Fold label (0..k-1) for each observation: a seeded permutation cut into
/// k blocks whose sizes differ by at most one.
inline std::vector<int> cv_folds(Index n, int k, std::uint64_t seed) {
  if (k < 2 || k > n) throw Error(ErrorCode::InvalidArgument, "fold count must lie in [2, n]");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Engine rng = make_engine(seed, {0xf01d5ULL});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> label(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    label[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = static_cast<int>((i * k) / n);
  }
  return label;
}

namespace detail {

inline std::vector<Index> thin_indices(Index count, Index keep) {
  std::vector<Index> out;
  if (keep == 0 || count <= keep) {
    out.resize(static_cast<std::size_t>(count));
    std::iota(out.begin(), out.end(), Index{0});
    return out;
  }
  for (Index i = 0; i < keep; ++i) {
    const Index idx = static_cast<Index>(std::llround(static_cast<double>(i) * static_cast<double>(count - 1) /
                                                      static_cast<double>(keep - 1)));
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

struct CvSplit {
  StandardizedDesign train;
  Matrix x_valid;
  Vector y_valid;
};

/// Training designs reuse the rows of the full standardized design as-is.
inline std::vector<CvSplit> make_splits(const StandardizedDesign& design, const std::vector<int>& label, int k) {
  std::vector<CvSplit> out;
  for (int f = 0; f < k; ++f) {
    std::vector<Index> tr, va;
    for (Index i = 0; i < design.n(); ++i) (label[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
    CvSplit s;
    s.train = as_standardized(design.x(tr, Eigen::all), design.y(tr));
    s.x_valid = design.x(va, Eigen::all);
    s.y_valid = design.y(va);
    out.push_back(std::move(s));
  }
  return out;
}

struct Candidate {
  double lambda1;
  double score;
  std::size_t df;
};

/// Scores the lambda1 breakpoints of one (lambda2, weights) cell.
inline std::vector<Candidate> score_cell(const StandardizedDesign& design, const PenaltyMatrix& penalty,
                                         double lambda2, const WeightVector& weights, bool rescale,
                                         const TuningConfig& config, const std::vector<CvSplit>& splits) {
  AugmentedProblem problem = augment(design, penalty, lambda2);
  problem.weights = weights.w;
  // Adaptive weights can span many orders of magnitude, which inflates
  // lambda_max; a ratio cut-off would then end the path before weakly
  // weighted-down variables enter. Weighted cells run the path to zero.
  PathOptions path_options = config.fit.path;
  if (weights.scheme != WeightScheme::Unit && path_options.lambda1_stop < 0.0) path_options.lambda1_stop = 0.0;
  const PathSolution path = lars_lasso_path(problem, path_options);
  const std::vector<Index> keep = thin_indices(path.size(), config.lambda1_grid_size);
  const Vector n_full = rescale ? n_rescaling(penalty, lambda2, design.n()) : Vector::Ones(design.p());

  std::vector<Candidate> out;
  out.reserve(keep.size());
  const Matrix& gram = design.gram_available ? design.gram : Matrix(design.x.transpose() * design.x);
  const Vector xty = design.x.transpose() * design.y;
  const double yty = design.y.squaredNorm();
  for (Index k : keep) {
    const Vector beta = path.coefs.col(k).cwiseProduct(n_full);
    std::size_t df = 0;
    for (Index j = 0; j < beta.size(); ++j) df += beta[j] != 0.0;
    out.push_back({path.breakpoints[static_cast<std::size_t>(k)], 0.0, df});
    if (config.selector == Selector::BIC) {
      const double rss = yty - 2.0 * beta.dot(xty) + beta.dot(gram * beta);
      out.back().score = bic_score(design.n(), rss, df);
    }
  }
  if (config.selector == Selector::BIC) return out;

  const double lambda_end = out.back().lambda1;
  std::vector<double> sse(out.size(), 0.0);
  for (const CvSplit& split : splits) {
    AugmentedProblem sub = augment(split.train, penalty, lambda2);
    sub.weights = weights.w;
    PathOptions opts = config.fit.path;
    opts.lambda1_stop = lambda_end;
    const PathSolution train_path = lars_lasso_path(sub, opts);
    const Vector n_train = rescale ? n_rescaling(penalty, lambda2, split.train.n()) : Vector::Ones(design.p());
    for (std::size_t c = 0; c < out.size(); ++c) {
      const Vector beta = train_path.coef_at(out[c].lambda1).cwiseProduct(n_train);
      sse[c] += (split.y_valid - split.x_valid * beta).squaredNorm();
    }
  }
  for (std::size_t c = 0; c < out.size(); ++c) out[c].score = sse[c] / static_cast<double>(design.n());
  return out;
}

/// True when (score, l2, l1) beats the incumbent; near-equal scores go to
/// the larger lambda2, then the larger lambda1.
inline bool better(double score, double l2, double l1, double best_score, double best_l2, double best_l1) {
  if (!std::isfinite(best_score)) return true;
  const double tol = 1e-12 * std::max(1.0, std::abs(best_score));
  if (score < best_score - tol) return true;
  if (score > best_score + tol) return false;
  if (l2 != best_l2) return l2 > best_l2;
  return l1 > best_l1;
}

inline void run_cells(const StandardizedDesign& design, const PenaltyMatrix& penalty,
                      const std::vector<double>& lambda2s, const WeightVector& weights, bool adaptive,
                      const TuningConfig& config, TuningResult& result) {
  std::vector<CvSplit> splits;
  if (config.selector == Selector::KFoldCV) {
    splits = make_splits(design, cv_folds(design.n(), config.folds, config.seed), config.folds);
  }
  const bool rescale = adaptive && config.fit.apply_n;
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double l2 : lambda2s) {
    try {
      for (const Candidate& c : score_cell(design, penalty, l2, weights, rescale, config, splits)) {
        result.score_table.push_back({l2, c.lambda1, c.score, c.df, adaptive});
        if (better(c.score, l2, c.lambda1, best, result.best_lambda2, result.best_lambda1)) {
          best = c.score;
          result.best_lambda1 = c.lambda1;
          result.best_lambda2 = l2;
        }
        any = true;
      }
    } catch (const Error& e) {
      if (!e.is_numerical()) throw;
      result.failed.push_back({l2, adaptive, e.what()});
    }
  }
  if (!any) throw Error(ErrorCode::AllCellsFailed, "every tuning cell failed");
}

}  // namespace detail

/// Tunes (lambda1, lambda2) for the plain estimator with a fixed penalty.
inline TuningResult tune_gril(const StandardizedDesign& design, const PenaltyMatrix& penalty,
                              const TuningConfig& config) {
  validate(config);
  TuningResult result;
  result.selector_used = config.selector;
  detail::run_cells(design, penalty, config.lambda2_grid, unit_weights(design.p()), false, config, result);
  result.fit = gril_fit(design, penalty, result.best_lambda1, result.best_lambda2, config.fit);
  return result;
}

/// Second stage of the adaptive pipeline: weights from `initial.fit`, then
/// lambda1* is tuned at the lambda2 chosen for the initial fit.
inline TuningResult tune_adaptive(const StandardizedDesign& design, const PenaltyMatrix& penalty,
                                  const TuningConfig& config, const TuningResult& initial) {
  validate(config);
  TuningResult result;
  result.selector_used = config.selector;
  result.gamma = config.gamma_override ? *config.gamma_override : gamma_from_dims(design.n(), design.p());
  result.score_table = initial.score_table;
  result.failed = initial.failed;
  result.initial_fit = initial.fit;
  const WeightVector weights = make_weights(initial.fit.beta, result.gamma, config.weight_scheme, design.n());
  detail::run_cells(design, penalty, {initial.best_lambda2}, weights, true, config, result);
  result.fit = adagril_fit(design, penalty, result.best_lambda1, result.best_lambda2, weights, config.fit);
  return result;
}

inline TuningResult select(const StandardizedDesign& design, const PenaltyMatrix& penalty,
                           const TuningConfig& config, bool adaptive) {
  TuningResult plain = tune_gril(design, penalty, config);
  if (!adaptive) return plain;
  return tune_adaptive(design, penalty, config, plain);
}

/// Builds Q from the full design once; cross-validation reuses it per fold.
inline TuningResult select(const StandardizedDesign& design, const PenaltyBuilder& builder,
                           const TuningConfig& config, bool adaptive) {
  return select(design, builder(design), config, adaptive);
}

}  // namespace gril
