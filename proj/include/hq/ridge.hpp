#pragma once

#include "hq/features.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace hq {

/// 10 log-spaced values from 1e-3 to 1e3.
std::vector<double> default_alpha_grid();

struct RidgeOptions {
  std::vector<double> alpha_grid = default_alpha_grid();
  /// Up to this many rows alpha is chosen by exact leave-one-out error;
  /// above it by 5-fold cross-validation.
  std::size_t loo_max_rows = 10000;
};

/// One-vs-rest ridge classifier on standardised features.
///
/// Decision scores are ((x - feature_mean) / feature_scale) * coef^T + intercept.
struct RidgeModel {
  Matrix coef;       // c x d, in standardised feature space
  Vector intercept;  // c
  double alpha = 0.0;
  Vector feature_mean;
  Vector feature_scale;
  /// Selection criterion per grid entry (summed squared LOO or CV residual).
  std::vector<double> alpha_errors;

  std::size_t n_classes() const { return static_cast<std::size_t>(coef.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(coef.cols()); }

  void save(std::ostream& out) const;
  static RidgeModel load(std::istream& in);
};

/// Fits {-1,+1} one-vs-rest targets for classes 0..n_classes-1, picking
/// alpha from the grid by the lowest summed squared held-out residual and
/// refitting on all rows. Constant columns receive zero weight.
RidgeModel ridge_fit(const FeatureMatrix& x, const Labels& y, std::size_t n_classes, const RidgeOptions& options = {});

/// Raw one-vs-rest scores, n x c.
Matrix ridge_decision(const RidgeModel& model, const FeatureMatrix& x);

/// Row-wise softmax with max subtraction.
Matrix scores_to_probs(const Matrix& scores);

}  // namespace hq
