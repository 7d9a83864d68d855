#pragma once

#include "hq/features.hpp"
#include "hq/run_control.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hq {

struct ForestConfig {
  int n_trees = 200;
  double max_features_fraction = 0.1;
  std::uint64_t seed = 42;
  /// Record every evaluated split candidate per node (memory heavy).
  bool audit = false;

  void validate() const;
};

/// One evaluated (feature, threshold) pair at an internal node.
struct SplitCandidate {
  std::int32_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
  double feature_min = 0.0;
  double feature_max = 0.0;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t n_samples = 0;
  std::uint32_t histogram = 0;  // leaf: offset into Tree::histograms

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
  /// n_classes counts per leaf.
  std::vector<std::uint32_t> histograms;
  /// Per node, only when ForestConfig::audit is set. The chosen split is the
  /// first entry with the maximal gain.
  std::vector<std::vector<SplitCandidate>> audit;
};

/// Extremely randomised trees with entropy criterion and no bootstrap.
struct ForestModel {
  ForestConfig config;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<Tree> trees;

  void save(std::ostream& out) const;
  static ForestModel load(std::istream& in);
};

/// ceil(fraction * d), at least 1 and at most d.
std::size_t features_per_split(std::size_t n_features, double fraction);

/// Grows config.n_trees trees on all rows. At each node, features_per_split()
/// candidate features are drawn without replacement; each non-constant
/// candidate gets one uniform threshold in (min, max) of the node's values,
/// and the candidate with the highest information gain wins. Nodes that are
/// pure, hold one sample, or see only constant candidates become leaves.
/// Tree t uses the RNG stream derive_seed(config.seed, t).
ForestModel forest_fit(const FeatureMatrix& x, const Labels& y, std::size_t n_classes, const ForestConfig& config,
                       const Deadline& deadline = {});

/// Mean over trees of the leaf class-frequency distribution, n x c.
Matrix forest_predict_proba(const ForestModel& model, const FeatureMatrix& x);

/// Text dump of every node and, in audit mode, its evaluated candidates.
std::string forest_audit_dump(const ForestModel& model);

}  // namespace hq
