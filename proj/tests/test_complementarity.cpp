#include "helpers.hpp"

#include "hq/complementarity.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace hq;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  }
  return m;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double den = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  return den == 0.0 ? 0.0 : ca.dot(cb) / den;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

// Textbook regularised CCA on z-scored blocks.
std::vector<double> cca_oracle(const Matrix& h, const Matrix& q, double eps, std::size_t r) {
  auto z = [](const Matrix& m) {
    Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
    for (Eigen::Index j = 0; j < c.cols(); ++j) c.col(j) /= std::sqrt(c.col(j).squaredNorm() / (c.rows() - 1.0));
    return c;
  };
  const Eigen::MatrixXd zh = z(h), zq = z(q);
  const double n1 = static_cast<double>(h.rows()) - 1.0;
  const Eigen::MatrixXd chh = zh.transpose() * zh / n1 + eps * Eigen::MatrixXd::Identity(h.cols(), h.cols());
  const Eigen::MatrixXd cqq = zq.transpose() * zq / n1 + eps * Eigen::MatrixXd::Identity(q.cols(), q.cols());
  const Eigen::MatrixXd chq = zh.transpose() * zq / n1;
  const Eigen::MatrixXd t = inverse_sqrt(chh) * chq * inverse_sqrt(cqq);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
  std::vector<double> out;
  for (std::size_t i = 0; i < r; ++i) out.push_back(svd.singularValues()(static_cast<Eigen::Index>(i)));
  return out;
}

}  // namespace

TEST_CASE("hand triple") {
  const auto m = prediction_metrics({0, 1, 1}, {1, 1, 0}, {0, 1, 0});
  CHECK(std::abs(m.disagreement - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(m.acc_oracle - 1.0) < 1e-12);
  CHECK(std::abs(m.oracle_gain - 1.0 / 3.0) < 1e-12);
  REQUIRE(m.error_corr.defined());
  CHECK(std::abs(*m.error_corr.value + 0.5) < 1e-12);
  CHECK(m.both_wrong == 0);
}

TEST_CASE("oracle sandwich on random triples") {
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    const int c = 2 + static_cast<int>(rng.below(4));
    Labels h(n), q(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
      q[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
      t[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
    }
    const auto m = prediction_metrics(h, q, t);
    CHECK(std::max(m.acc_h, m.acc_q) <= m.acc_oracle + 1e-12);
    CHECK(m.acc_oracle <= std::min(1.0, m.acc_h + m.acc_q) + 1e-12);
    CHECK(m.disagreement + 1e-12 >= std::abs(m.acc_h - m.acc_q));
    CHECK(m.oracle_gain >= -1e-12);
    if (m.error_corr.defined()) {
      CHECK(*m.error_corr.value >= -1.0 - 1e-12);
      CHECK(*m.error_corr.value <= 1.0 + 1e-12);
      const auto eh = error_vector(h, t), eq = error_vector(q, t);
      const double want = pearson(Eigen::VectorXd(Eigen::Map<const Eigen::Matrix<std::uint8_t, -1, 1>>(eh.data(), static_cast<Eigen::Index>(n)).cast<double>()),
                                  Eigen::VectorXd(Eigen::Map<const Eigen::Matrix<std::uint8_t, -1, 1>>(eq.data(), static_cast<Eigen::Index>(n)).cast<double>()));
      CHECK(std::abs(*m.error_corr.value - want) < 1e-12);
    }
  }
}

TEST_CASE("error correlation undefined for a constant error vector") {
  const auto m = prediction_metrics({0, 1, 0}, {1, 1, 0}, {0, 1, 0});
  CHECK_FALSE(m.error_corr.defined());
  CHECK_FALSE(m.error_corr.reason.empty());
  CHECK(m.oracle_gain == 0.0);
  CHECK_THROWS_AS(prediction_metrics({0}, {0}, {0}), ConfigError);
  CHECK_THROWS_AS(prediction_metrics({0, 1}, {0}, {0, 1}), ConfigError);
}

TEST_CASE("oracle utilization") {
  const auto a = oracle_utilization(0.0229, 0.1239);
  REQUIRE(a.defined());
  CHECK(*a.value == doctest::Approx(18.48).epsilon(1e-3));
  const auto b = oracle_utilization(-0.0117, 0.1239);
  REQUIRE(b.defined());
  CHECK(*b.value == doctest::Approx(-9.44).epsilon(1e-3));
  const auto c = oracle_utilization(0.01, 0.0);
  CHECK_FALSE(c.defined());
  CHECK(c.reason == "oracle gain is zero");
}

TEST_CASE("oracle exceeding") {
  const auto r = oracle_exceeding({1, 1, 0, 2}, {1, 2, 0, 2}, {0, 1, 0, 2}, {0, 0, 0, 1});
  CHECK(r.both_wrong == 3);
  CHECK(r.rescued == 1);
  REQUIRE(r.rate.defined());
  CHECK(*r.rate.value == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(oracle_exceeding({0}, {0}, {0}, {0}).rate.defined());
}

TEST_CASE("median max cross-correlation against brute force") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Matrix h = gaussian(40, 301, seed);  // spans two tiles
    Matrix q = gaussian(40, 7, seed + 10);
    q.col(3) = 2.0 * h.col(5).array() + 1.0;
    std::vector<double> best;
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      double m = 0.0;
      for (Eigen::Index k = 0; k < q.cols(); ++k) m = std::max(m, std::abs(pearson(h.col(j), q.col(k))));
      best.push_back(m);
    }
    std::sort(best.begin(), best.end());
    const double want = best[150];
    const auto got = median_max_cross_correlation(h, q);
    CHECK(std::abs(got.median_max - want) < 1e-12);
    CHECK(got.constant_columns_h == 0);
  }
}

TEST_CASE("even column count averages the middle pair; constant columns count as zero") {
  Matrix h(5, 2), q(5, 1);
  h << 1, 7, 2, 7, 3, 7, 4, 7, 5, 7;
  q << 2, 4, 6, 8, 10;
  const auto r = median_max_cross_correlation(h, q);
  CHECK(r.constant_columns_h == 1);
  CHECK(r.median_max == doctest::Approx(0.5));
  CHECK_THROWS_AS(median_max_cross_correlation(Matrix(2, 1), Matrix(2, 1)), ConfigError);
}

TEST_CASE("canonical correlations") {
  SUBCASE("identical blocks") {
    const Matrix h = gaussian(300, 4, 1);
    const auto r = canonical_correlations(h, h);
    REQUIRE(r.size() == 4);
    CHECK(std::abs(r[0] - 1.0) < 1e-6);
  }
  SUBCASE("independent blocks") {
    const auto r = canonical_correlations(gaussian(5000, 5, 2), gaussian(5000, 5, 3));
    REQUIRE(r.size() == 5);
    for (double v : r) CHECK(v <= 0.1);
  }
  SUBCASE("matches a textbook regularised solver") {
    Matrix h = gaussian(60, 6, 4);
    Matrix q = gaussian(60, 3, 5);
    q.col(0) += 0.8 * h.col(1);
    q.col(2) += 0.3 * h.col(4);
    const auto got = canonical_correlations(h, q);
    const auto want = cca_oracle(h, q, 1e-6, 3);
    REQUIRE(got.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-8);
    CHECK(std::is_sorted(got.rbegin(), got.rend()));
  }
  SUBCASE("component count is capped by rows") {
    CHECK(canonical_correlations(gaussian(6, 10, 1), gaussian(6, 10, 2)).size() == 3);
  }
  SUBCASE("rank zero is an error") {
    Matrix h = Matrix::Constant(10, 2, 3.0);
    CHECK_THROWS_AS(canonical_correlations(h, gaussian(10, 2, 1)), ConfigError);
  }
}
