#include "helpers.hpp"

#include "hq/forest.hpp"
#include "hq/parallel.hpp"
#include "hq/run_control.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace hq;

namespace {

FeatureMatrix gaussian_features(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix f;
  f.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < f.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.values.cols(); ++j) f.values(i, j) = rng.normal();
  }
  f.columns.resize(d);
  return f;
}

Labels xor_labels(const FeatureMatrix& f) {
  Labels y(f.rows());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    y[i] = (f.values(r, 0) > 0) != (f.values(r, 1) > 0) ? 1 : 0;
  }
  return y;
}

double entropy_oracle(const std::map<int, int>& counts) {
  int total = 0;
  for (const auto& [c, k] : counts) total += k;
  double h = 0.0;
  for (const auto& [c, k] : counts) {
    if (k > 0) h -= (static_cast<double>(k) / total) * std::log2(static_cast<double>(k) / total);
  }
  return h;
}

// Routes every training row through the tree and rechecks each node from
// its own samples: candidate ranges, gains, the winning split and the leaf
// histograms.
void audit_tree(const Tree& tree, const FeatureMatrix& x, const Labels& y, std::size_t n_classes) {
  std::vector<std::vector<std::size_t>> members(tree.nodes.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::size_t node = 0;
    members[0].push_back(i);
    while (!tree.nodes[node].is_leaf()) {
      const auto& nd = tree.nodes[node];
      node = static_cast<std::size_t>(x.values(static_cast<Eigen::Index>(i), nd.feature) <= nd.threshold ? nd.left
                                                                                                            : nd.right);
      members[node].push_back(i);
    }
  }
  for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
    const auto& nd = tree.nodes[node];
    const auto& rows = members[node];
    REQUIRE(nd.n_samples == rows.size());
    std::map<int, int> counts;
    for (std::size_t r : rows) ++counts[y[r]];
    if (nd.is_leaf()) {
      for (std::size_t c = 0; c < n_classes; ++c) {
        CHECK(tree.histograms[nd.histogram + c] == static_cast<std::uint32_t>(counts[static_cast<int>(c)]));
      }
      continue;
    }
    const auto& cands = tree.audit[node];
    REQUIRE_FALSE(cands.empty());
    const double parent = entropy_oracle(counts);
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      const auto& cand = cands[k];
      double lo = INFINITY, hi = -INFINITY;
      std::map<int, int> left, right;
      for (std::size_t r : rows) {
        const double v = x.values(static_cast<Eigen::Index>(r), cand.feature);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++(v <= cand.threshold ? left : right)[y[r]];
      }
      CHECK(cand.feature_min == lo);
      CHECK(cand.feature_max == hi);
      CHECK(cand.threshold >= lo);
      CHECK(cand.threshold < hi);
      int nl = 0, nr = 0;
      for (const auto& [c, k2] : left) nl += k2;
      for (const auto& [c, k2] : right) nr += k2;
      const double gain =
          parent - (nl * entropy_oracle(left) + nr * entropy_oracle(right)) / static_cast<double>(rows.size());
      CHECK(std::abs(cand.gain - gain) < 1e-12);
      if (cand.gain > best) {
        best = cand.gain;
        best_i = k;
      }
    }
    CHECK(nd.feature == cands[best_i].feature);
    CHECK(nd.threshold == cands[best_i].threshold);
  }
}

}  // namespace

TEST_CASE("features_per_split") {
  CHECK(features_per_split(1, 0.1) == 1);
  CHECK(features_per_split(10, 0.1) == 1);
  CHECK(features_per_split(11, 0.1) == 2);
  CHECK(features_per_split(100, 0.1) == 10);
  CHECK(features_per_split(5, 1.0) == 5);
}

TEST_CASE("audit replay of every node") {
  const FeatureMatrix x = gaussian_features(150, 12, 3);
  Labels y(150);
  for (std::size_t i = 0; i < 150; ++i) y[i] = static_cast<int>(i % 3);
  ForestConfig c;
  c.n_trees = 5;
  c.max_features_fraction = 0.3;
  c.audit = true;
  const ForestModel m = forest_fit(x, y, 3, c);
  for (const Tree& t : m.trees) {
    audit_tree(t, x, y, 3);
    for (const auto& cands : t.audit) CHECK(cands.size() <= features_per_split(12, 0.3));
  }
  CHECK_FALSE(forest_audit_dump(m).empty());
}

TEST_CASE("fully grown trees fit distinct training points") {
  const FeatureMatrix x = gaussian_features(80, 3, 1);
  Labels y(80);
  for (std::size_t i = 0; i < 80; ++i) y[i] = static_cast<int>(i % 4);
  ForestConfig c;
  c.n_trees = 10;
  c.max_features_fraction = 1.0;
  const ForestModel m = forest_fit(x, y, 4, c);
  CHECK(accuracy(row_argmax(forest_predict_proba(m, x)), y) == 1.0);
}

TEST_CASE("probabilities are row-stochastic") {
  const FeatureMatrix x = gaussian_features(60, 5, 2);
  const Labels y = xor_labels(x);
  ForestConfig c;
  c.n_trees = 20;
  const Matrix p = forest_predict_proba(forest_fit(x, y, 2, c), gaussian_features(30, 5, 9));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    CHECK(p.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.row(r).minCoeff() >= 0.0);
  }
}

TEST_CASE("learns XOR") {
  const FeatureMatrix train = gaussian_features(400, 2, 5);
  const FeatureMatrix test = gaussian_features(400, 2, 6);
  ForestConfig c;
  c.n_trees = 100;
  const ForestModel m = forest_fit(train, xor_labels(train), 2, c);
  CHECK(accuracy(row_argmax(forest_predict_proba(m, test)), xor_labels(test)) > 0.9);
}

TEST_CASE("identical results across thread counts and runs") {
  const FeatureMatrix x = gaussian_features(120, 20, 4);
  const Labels y = xor_labels(x);
  ForestConfig c;
  c.n_trees = 16;
  const std::size_t saved = num_threads();
  set_num_threads(1);
  const FeatureMatrix probe = gaussian_features(50, 20, 5);
  const Matrix a = forest_predict_proba(forest_fit(x, y, 2, c), probe);
  set_num_threads(4);
  const Matrix b = forest_predict_proba(forest_fit(x, y, 2, c), probe);
  set_num_threads(saved);
  CHECK(a == b);
  c.seed = 7;
  CHECK(forest_predict_proba(forest_fit(x, y, 2, c), probe) != a);
}

TEST_CASE("a label vector with one present class gives single-leaf trees") {
  const FeatureMatrix x = gaussian_features(10, 3, 1);
  const ForestModel m = forest_fit(x, Labels(10, 1), 2, ForestConfig{});
  for (const Tree& t : m.trees) CHECK(t.nodes.size() == 1);
  const Matrix p = forest_predict_proba(m, x);
  CHECK(p.col(1).minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.col(0).maxCoeff() == 0.0);
}

TEST_CASE("input errors") {
  const FeatureMatrix x = gaussian_features(6, 2, 1);
  CHECK_THROWS_AS(forest_fit(x, Labels(6, 0), 1, ForestConfig{}), ConfigError);
  CHECK_THROWS_AS(forest_fit(x, Labels{0, 1, 2, 0, 1, 0}, 2, ForestConfig{}), ConfigError);
  ForestConfig bad;
  bad.n_trees = 0;
  CHECK_THROWS_AS(forest_fit(x, Labels{0, 1, 0, 1, 0, 1}, 2, bad), ConfigError);
  const ForestModel m = forest_fit(x, Labels{0, 1, 0, 1, 0, 1}, 2, ForestConfig{});
  CHECK_THROWS_AS(forest_predict_proba(m, gaussian_features(2, 3, 1)), DataError);
}

TEST_CASE("expired deadline stops training") {
  const FeatureMatrix x = gaussian_features(50, 4, 1);
  const Deadline d = Deadline::after_seconds(0.0);
  CHECK_THROWS_AS(forest_fit(x, xor_labels(x), 2, ForestConfig{}, d), TimeoutError);
}

TEST_CASE("model round trip") {
  const FeatureMatrix x = gaussian_features(40, 4, 1);
  ForestConfig c;
  c.n_trees = 8;
  const ForestModel m = forest_fit(x, xor_labels(x), 2, c);
  std::stringstream blob;
  m.save(blob);
  const ForestModel back = ForestModel::load(blob);
  CHECK(forest_predict_proba(back, x) == forest_predict_proba(m, x));
}

TEST_CASE("forest refuses test-derived features under the tripwire") {
  FeatureMatrix x = gaussian_features(10, 2, 1);
  x.from_test = true;
  TaintGuard guard;
  CHECK_THROWS_AS(forest_fit(x, xor_labels(x), 2, ForestConfig{}), TaintError);
}
