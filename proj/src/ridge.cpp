#include "hq/ridge.hpp"

#include "hq/binary_io.hpp"
#include "hq/run_control.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hq {

namespace {

constexpr std::string_view kRidgeMagic = "HQRM";
constexpr std::uint32_t kRidgeVersion = 1;
constexpr std::size_t kCvFolds = 5;

using ColMatrix = Eigen::MatrixXd;

/// Spectral ridge solver for centred Z (n x d) and centred targets Y (n x c).
/// Works in whichever of the n x n Gram or d x d covariance space is smaller.
class SpectralRidge {
 public:
  SpectralRidge(const ColMatrix& z, const ColMatrix& y) : n_(z.rows()), dual_(z.rows() <= z.cols()) {
    if (dual_) {
      ColMatrix gram(n_, n_);
      gram.setZero();
      gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
      gram = gram.selfadjointView<Eigen::Lower>();
      Eigen::SelfAdjointEigenSolver<ColMatrix> eig(gram);
      lambda_ = eig.eigenvalues().cwiseMax(0.0);
      basis_ = eig.eigenvectors();          // n x r
      projected_y_ = basis_.transpose() * y;  // r x c
      z_t_basis_ = z.transpose() * basis_;    // d x r
    } else {
      ColMatrix cov(z.cols(), z.cols());
      cov.setZero();
      cov.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
      cov = cov.selfadjointView<Eigen::Lower>();
      Eigen::SelfAdjointEigenSolver<ColMatrix> eig(cov);
      lambda_ = eig.eigenvalues().cwiseMax(0.0);
      z_t_basis_ = eig.eigenvectors();         // d x r
      basis_ = z * z_t_basis_;                  // n x r, equals U * sqrt(lambda)
      projected_y_ = basis_.transpose() * y;   // r x c
    }
    y_ = y;
  }

  /// d x c coefficients at the given alpha.
  ColMatrix coef(double alpha) const {
    const Eigen::VectorXd inv = (lambda_.array() + alpha).inverse();
    return z_t_basis_ * (inv.asDiagonal() * projected_y_);
  }

  /// Summed squared leave-one-out residual, counting the unpenalised
  /// intercept (hat matrix H + 11^T/n, exact because Z is centred).
  double loo_error(double alpha) const {
    Eigen::VectorXd shrink(lambda_.size());
    if (dual_) {
      shrink = lambda_.array() / (lambda_.array() + alpha);
    } else {
      shrink = (lambda_.array() + alpha).inverse();
    }
    const ColMatrix fitted = basis_ * (shrink.asDiagonal() * projected_y_);
    const Eigen::VectorXd hat = basis_.array().square().matrix() * shrink;
    const double inv_n = 1.0 / static_cast<double>(n_);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double denom = std::max(1.0 - hat(i) - inv_n, 1e-12);
      total += ((y_.row(i) - fitted.row(i)) / denom).squaredNorm();
    }
    return total;
  }

 private:
  Eigen::Index n_;
  bool dual_;
  Eigen::VectorXd lambda_;
  ColMatrix basis_;
  ColMatrix projected_y_;
  ColMatrix z_t_basis_;
  ColMatrix y_;
};

ColMatrix one_vs_rest(const Labels& y, std::size_t n_classes) {
  ColMatrix t = ColMatrix::Constant(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(n_classes), -1.0);
  for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i), y[i]) = 1.0;
  return t;
}

std::size_t select_alpha(const std::vector<double>& errors) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < errors.size(); ++a) {
    if (errors[a] < errors[best]) best = a;
  }
  return best;
}

std::vector<double> cv_errors(const ColMatrix& z, const ColMatrix& y, const std::vector<double>& grid) {
  std::vector<double> errors(grid.size(), 0.0);
  const Eigen::Index n = z.rows();
  for (std::size_t fold = 0; fold < kCvFolds; ++fold) {
    std::vector<Eigen::Index> fit_rows, held_rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      (static_cast<std::size_t>(i) % kCvFolds == fold ? held_rows : fit_rows).push_back(i);
    }
    if (held_rows.empty() || fit_rows.size() < 2) continue;
    ColMatrix zf = z(fit_rows, Eigen::all);
    ColMatrix yf = y(fit_rows, Eigen::all);
    const Eigen::RowVectorXd z_mean = zf.colwise().mean();
    const Eigen::RowVectorXd y_mean = yf.colwise().mean();
    zf.rowwise() -= z_mean;
    yf.rowwise() -= y_mean;
    const SpectralRidge solver(zf, yf);
    ColMatrix zh = z(held_rows, Eigen::all);
    zh.rowwise() -= z_mean;
    const ColMatrix yh = y(held_rows, Eigen::all);
    for (std::size_t a = 0; a < grid.size(); ++a) {
      ColMatrix pred = zh * solver.coef(grid[a]);
      pred.rowwise() += y_mean;
      errors[a] += (yh - pred).squaredNorm();
    }
  }
  return errors;
}

}  // namespace

std::vector<double> default_alpha_grid() {
  std::vector<double> grid(10);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = std::pow(10.0, -3.0 + 6.0 * static_cast<double>(i) / 9.0);
  return grid;
}

RidgeModel ridge_fit(const FeatureMatrix& x, const Labels& y, std::size_t n_classes, const RidgeOptions& options) {
  check_fit_input(x.from_test, "ridge_fit");
  if (x.rows() != y.size()) throw ConfigError("ridge_fit: row/label count mismatch");
  if (x.rows() < 2) throw ConfigError("ridge_fit: needs at least 2 rows");
  if (options.alpha_grid.empty()) throw ConfigError("ridge_fit: empty alpha grid");
  for (double a : options.alpha_grid) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("ridge_fit: alphas must be positive and finite");
  }
  std::vector<char> seen(n_classes, 0);
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw ConfigError("ridge_fit: label out of range");
    seen[static_cast<std::size_t>(label)] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 1) < 2) throw ConfigError("ridge_fit: single class, need at least 2");
  if (!x.values.allFinite()) throw DataError("ridge_fit: non-finite feature values");

  const auto n = static_cast<double>(x.rows());
  RidgeModel model;
  model.feature_mean = x.values.colwise().sum().transpose() / n;
  model.feature_scale.resize(model.feature_mean.size());
  ColMatrix z = x.values;
  z.rowwise() -= model.feature_mean.transpose();
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double sd = std::sqrt(z.col(j).squaredNorm() / n);
    model.feature_scale(j) = sd > 0.0 ? sd : 1.0;
    z.col(j) /= model.feature_scale(j);
  }

  ColMatrix targets = one_vs_rest(y, n_classes);
  const Eigen::RowVectorXd target_mean = targets.colwise().mean();
  targets.rowwise() -= target_mean;

  const SpectralRidge solver(z, targets);
  if (x.rows() <= options.loo_max_rows) {
    model.alpha_errors.reserve(options.alpha_grid.size());
    for (double a : options.alpha_grid) model.alpha_errors.push_back(solver.loo_error(a));
  } else {
    model.alpha_errors = cv_errors(z, one_vs_rest(y, n_classes), options.alpha_grid);
  }
  model.alpha = options.alpha_grid[select_alpha(model.alpha_errors)];
  model.coef = solver.coef(model.alpha).transpose();
  model.intercept = target_mean.transpose();
  if (!model.coef.allFinite()) throw DataError("ridge_fit: non-finite coefficients");
  return model;
}

Matrix ridge_decision(const RidgeModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.n_features()) {
    throw DataError("ridge_decision: expected " + std::to_string(model.n_features()) + " columns, got " +
                    std::to_string(x.cols()));
  }
  Matrix z = x.values;
  z.rowwise() -= model.feature_mean.transpose();
  z.array().rowwise() /= model.feature_scale.transpose().array();
  Matrix scores = z * model.coef.transpose();
  scores.rowwise() += model.intercept.transpose();
  return scores;
}

Matrix scores_to_probs(const Matrix& scores) {
  Matrix p(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double top = scores.row(r).maxCoeff();
    p.row(r) = (scores.row(r).array() - top).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

void RidgeModel::save(std::ostream& out) const {
  io::write_magic(out, kRidgeMagic, kRidgeVersion);
  io::write(out, alpha);
  io::write_matrix(out, coef);
  io::write_vector(out, std::vector<double>(intercept.begin(), intercept.end()));
  io::write_vector(out, std::vector<double>(feature_mean.begin(), feature_mean.end()));
  io::write_vector(out, std::vector<double>(feature_scale.begin(), feature_scale.end()));
  io::write_vector(out, alpha_errors);
}

RidgeModel RidgeModel::load(std::istream& in) {
  io::read_magic(in, kRidgeMagic, kRidgeVersion);
  RidgeModel m;
  m.alpha = io::read<double>(in, "alpha");
  m.coef = io::read_matrix(in, "coef");
  auto to_vec = [](const std::vector<double>& v) {
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  m.intercept = to_vec(io::read_vector<double>(in, "intercept"));
  m.feature_mean = to_vec(io::read_vector<double>(in, "feature_mean"));
  m.feature_scale = to_vec(io::read_vector<double>(in, "feature_scale"));
  m.alpha_errors = io::read_vector<double>(in, "alpha_errors");
  if (m.intercept.size() != m.coef.rows() || m.feature_mean.size() != m.coef.cols() ||
      m.feature_scale.size() != m.coef.cols()) {
    throw DataError("ridge blob: inconsistent shapes");
  }
  return m;
}

}  // namespace hq
