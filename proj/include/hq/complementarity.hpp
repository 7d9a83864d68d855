#pragma once

#include "hq/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hq {

/// A metric value that may be undefined, with the reason when it is.
struct MaybeValue {
  std::optional<double> value;
  std::string reason;

  static MaybeValue of(double v) { return {v, {}}; }
  static MaybeValue undefined(std::string why) { return {std::nullopt, std::move(why)}; }
  bool defined() const { return value.has_value(); }
};

struct CrossCorrelation {
  double median_max = 0.0;
  /// Columns of either matrix with zero variance (their correlations count as 0).
  std::size_t constant_columns_h = 0;
  std::size_t constant_columns_q = 0;
};

/// Median over columns j of h of max_k |pearson(h_j, q_k)|. Computed in
/// column tiles with a fixed accumulation order.
CrossCorrelation median_max_cross_correlation(const Matrix& h, const Matrix& q);

/// r = min(max_components, d_h, d_q, floor(n/2)) canonical correlations in
/// descending order. Both inputs are standardised; covariances get an
/// epsilon ridge before whitening.
std::vector<double> canonical_correlations(const Matrix& h, const Matrix& q, std::size_t max_components = 5,
                                           double epsilon = 1e-6);

/// 1 where pred != truth.
std::vector<std::uint8_t> error_vector(const Labels& pred, const Labels& truth);

struct PredictionMetrics {
  std::size_t n = 0;
  double acc_h = 0.0;
  double acc_q = 0.0;
  double acc_oracle = 0.0;
  double oracle_gain = 0.0;
  double disagreement = 0.0;
  MaybeValue error_corr;
  std::size_t both_wrong = 0;
};

/// Error correlation, disagreement and oracle accuracy over the full set.
PredictionMetrics prediction_metrics(const Labels& pred_h, const Labels& pred_q, const Labels& truth);

/// 100 * ensemble_gain / oracle_gain; undefined when oracle_gain < 1e-12.
MaybeValue oracle_utilization(double ensemble_gain, double oracle_gain);

/// Fraction of the both-wrong samples that a third predictor gets right;
/// undefined when no sample has both bases wrong.
struct OracleExceeding {
  std::size_t both_wrong = 0;
  std::size_t rescued = 0;
  MaybeValue rate;
};

OracleExceeding oracle_exceeding(const Labels& pred_h, const Labels& pred_q, const Labels& pred_ensemble,
                                 const Labels& truth);

struct ComplementarityReport {
  std::string dataset;
  double median_max_cross_corr = 0.0;
  std::size_t constant_columns_h = 0;
  std::size_t constant_columns_q = 0;
  std::vector<double> canonical_corrs;
  PredictionMetrics prediction;
  std::uint64_t subsample_seed = 42;
  std::size_t subsample_n = 0;
  std::size_t n_test = 0;
};

}  // namespace hq
