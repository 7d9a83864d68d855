#include "hq/complementarity.hpp"

#include "hq/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace hq {

namespace {

constexpr Eigen::Index kTileColumns = 256;

using ColMatrix = Eigen::MatrixXd;

/// Columns scaled so that dot products are Pearson correlations; zero-variance
/// columns become all zero. Returns the number of such columns.
std::size_t unit_columns(const Matrix& x, ColMatrix& out) {
  const auto n = static_cast<double>(x.rows());
  out = x;
  out.rowwise() -= out.colwise().mean();
  std::size_t constant = 0;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm <= 1e-12 * std::sqrt(n) * std::max(1.0, x.col(j).cwiseAbs().maxCoeff())) {
      out.col(j).setZero();
      ++constant;
    } else {
      out.col(j) /= norm;
    }
  }
  return constant;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

CrossCorrelation median_max_cross_correlation(const Matrix& h, const Matrix& q) {
  if (h.rows() != q.rows()) throw ConfigError("cross-correlation: row count mismatch");
  if (h.rows() < 3) throw ConfigError("cross-correlation: needs at least 3 rows");
  if (h.cols() == 0 || q.cols() == 0) throw ConfigError("cross-correlation: empty feature block");
  CrossCorrelation result;
  ColMatrix zh, zq;
  result.constant_columns_h = unit_columns(h, zh);
  result.constant_columns_q = unit_columns(q, zq);

  std::vector<double> best(static_cast<std::size_t>(h.cols()), 0.0);
  const auto tiles = static_cast<std::size_t>((h.cols() + kTileColumns - 1) / kTileColumns);
  parallel_for(tiles, [&](std::size_t t) {
    const Eigen::Index begin = static_cast<Eigen::Index>(t) * kTileColumns;
    const Eigen::Index width = std::min(kTileColumns, h.cols() - begin);
    const ColMatrix corr = zq.transpose() * zh.middleCols(begin, width);  // d_q x width
    for (Eigen::Index j = 0; j < width; ++j) {
      best[static_cast<std::size_t>(begin + j)] = std::min(1.0, corr.col(j).cwiseAbs().maxCoeff());
    }
  });
  result.median_max = median(std::move(best));
  return result;
}

std::vector<double> canonical_correlations(const Matrix& h, const Matrix& q, std::size_t max_components,
                                           double epsilon) {
  if (h.rows() != q.rows()) throw ConfigError("canonical_correlations: row count mismatch");
  if (h.rows() < 4) throw ConfigError("canonical_correlations: needs at least 4 rows");
  if (!(epsilon > 0.0)) throw ConfigError("canonical_correlations: epsilon must be > 0");
  const auto n = static_cast<std::size_t>(h.rows());
  const std::size_t r = std::min({max_components, static_cast<std::size_t>(h.cols()),
                                  static_cast<std::size_t>(q.cols()), n / 2});
  if (r == 0) return {};

  // Unit-norm columns times sqrt(n-1) are z-scores with sample variance 1.
  ColMatrix zh, zq;
  const std::size_t const_h = unit_columns(h, zh);
  const std::size_t const_q = unit_columns(q, zq);
  if (const_h == static_cast<std::size_t>(h.cols()) || const_q == static_cast<std::size_t>(q.cols())) {
    throw ConfigError("canonical_correlations: rank-zero input (all columns constant)");
  }
  const double scale = std::sqrt(static_cast<double>(n - 1));
  zh *= scale;
  zq *= scale;

  // With Z = U S V^T and C = Z^T Z / (n-1), the whitened cross-covariance
  // (Ch + eps I)^-1/2 Chq (Cq + eps I)^-1/2 has the singular values of
  // diag(a) U_h^T U_q diag(b), a_i = s_i / sqrt(s_i^2 + (n-1) eps).
  auto whitened_basis = [&](const ColMatrix& z) {
    Eigen::BDCSVD<ColMatrix> svd(z, Eigen::ComputeThinU);
    const Eigen::VectorXd s = svd.singularValues();
    const Eigen::VectorXd a =
        (s.array() / (s.array().square() + static_cast<double>(n - 1) * epsilon).sqrt()).matrix();
    return ColMatrix(svd.matrixU() * a.asDiagonal());
  };
  const ColMatrix cross = whitened_basis(zh).transpose() * whitened_basis(zq);
  Eigen::JacobiSVD<ColMatrix> svd(cross);
  const Eigen::VectorXd rho = svd.singularValues();  // descending

  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r && static_cast<Eigen::Index>(i) < rho.size(); ++i) {
    out[i] = std::clamp(rho(static_cast<Eigen::Index>(i)), 0.0, 1.0);
  }
  return out;
}

std::vector<std::uint8_t> error_vector(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size()) throw ConfigError("error_vector: length mismatch");
  std::vector<std::uint8_t> e(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) e[i] = pred[i] != truth[i] ? 1 : 0;
  return e;
}

PredictionMetrics prediction_metrics(const Labels& pred_h, const Labels& pred_q, const Labels& truth) {
  if (pred_h.size() != truth.size() || pred_q.size() != truth.size()) {
    throw ConfigError("prediction_metrics: length mismatch");
  }
  if (truth.size() < 2) throw ConfigError("prediction_metrics: needs at least 2 samples");
  const auto e_h = error_vector(pred_h, truth);
  const auto e_q = error_vector(pred_q, truth);
  const std::size_t n = truth.size();
  std::size_t wrong_h = 0, wrong_q = 0, both = 0, disagree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    wrong_h += e_h[i];
    wrong_q += e_q[i];
    both += e_h[i] & e_q[i];
    disagree += pred_h[i] != pred_q[i];
  }
  const auto dn = static_cast<double>(n);
  PredictionMetrics m;
  m.n = n;
  m.acc_h = static_cast<double>(n - wrong_h) / dn;
  m.acc_q = static_cast<double>(n - wrong_q) / dn;
  m.acc_oracle = static_cast<double>(n - both) / dn;
  m.oracle_gain = m.acc_oracle - std::max(m.acc_h, m.acc_q);
  m.disagreement = static_cast<double>(disagree) / dn;
  m.both_wrong = both;

  // Pearson of two binary vectors from the 2x2 counts.
  const double a = static_cast<double>(wrong_h);
  const double b = static_cast<double>(wrong_q);
  const double var_prod = a * (dn - a) * b * (dn - b);
  if (wrong_h == 0 || wrong_h == n || wrong_q == 0 || wrong_q == n) {
    m.error_corr = MaybeValue::undefined(wrong_h == 0 || wrong_h == n ? "hydra error vector has zero variance"
                                                                      : "quant error vector has zero variance");
  } else {
    m.error_corr = MaybeValue::of((dn * static_cast<double>(both) - a * b) / std::sqrt(var_prod));
  }
  return m;
}

MaybeValue oracle_utilization(double ensemble_gain, double oracle_gain) {
  if (oracle_gain < 1e-12) return MaybeValue::undefined("oracle gain is zero");
  return MaybeValue::of(100.0 * ensemble_gain / oracle_gain);
}

OracleExceeding oracle_exceeding(const Labels& pred_h, const Labels& pred_q, const Labels& pred_ensemble,
                                 const Labels& truth) {
  if (pred_h.size() != truth.size() || pred_q.size() != truth.size() || pred_ensemble.size() != truth.size()) {
    throw ConfigError("oracle_exceeding: length mismatch");
  }
  OracleExceeding r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (pred_h[i] != truth[i] && pred_q[i] != truth[i]) {
      ++r.both_wrong;
      r.rescued += pred_ensemble[i] == truth[i];
    }
  }
  r.rate = r.both_wrong == 0 ? MaybeValue::undefined("no sample has both bases wrong")
                             : MaybeValue::of(static_cast<double>(r.rescued) / static_cast<double>(r.both_wrong));
  return r;
}

}  // namespace hq
