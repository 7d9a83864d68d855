#include "hq/forest.hpp"

#include "hq/binary_io.hpp"
#include "hq/parallel.hpp"
#include "hq/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hq {

namespace {

constexpr std::string_view kForestMagic = "HQFO";
constexpr std::uint32_t kForestVersion = 1;

using ColMatrix = Eigen::MatrixXd;

double entropy(const std::uint32_t* counts, std::size_t n_classes, std::uint32_t total) {
  if (total == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(total);
  double h = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) continue;
    const double p = static_cast<double>(counts[c]) * inv;
    h -= p * std::log2(p);
  }
  return h;
}

class TreeBuilder {
 public:
  TreeBuilder(const ColMatrix& x, const Labels& y, std::size_t n_classes, std::size_t max_features, bool audit,
              std::uint64_t seed)
      : x_(x), y_(y), n_classes_(n_classes), max_features_(max_features), audit_(audit), rng_(seed) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
    samples_.resize(static_cast<std::size_t>(x.rows()));
    std::iota(samples_.begin(), samples_.end(), 0);
    left_counts_.resize(n_classes);
  }

  Tree build() {
    struct Pending {
      std::size_t node, begin, end;
    };
    std::vector<Pending> stack;
    tree_.nodes.emplace_back();
    if (audit_) tree_.audit.emplace_back();
    stack.push_back({0, 0, samples_.size()});
    std::vector<std::uint32_t> counts(n_classes_);
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const auto n = static_cast<std::uint32_t>(p.end - p.begin);
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = p.begin; i < p.end; ++i) ++counts[static_cast<std::size_t>(y_[samples_[i]])];
      tree_.nodes[p.node].n_samples = n;

      const bool pure = std::count_if(counts.begin(), counts.end(), [](std::uint32_t c) { return c > 0; }) <= 1;
      SplitCandidate best;
      bool found = false;
      if (!pure && n >= 2) found = find_split(p.node, p.begin, p.end, counts, best);
      if (!found) {
        make_leaf(p.node, counts);
        continue;
      }
      const auto mid = static_cast<std::size_t>(
          std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(p.begin),
                         samples_.begin() + static_cast<std::ptrdiff_t>(p.end),
                         [&](Eigen::Index s) { return x_(s, best.feature) <= best.threshold; }) -
          samples_.begin());
      const auto left = static_cast<std::int32_t>(tree_.nodes.size());
      tree_.nodes.emplace_back();
      tree_.nodes.emplace_back();
      if (audit_) {
        tree_.audit.emplace_back();
        tree_.audit.emplace_back();
      }
      TreeNode& node = tree_.nodes[p.node];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      // Right child is pushed first so the left subtree is built first.
      stack.push_back({static_cast<std::size_t>(left + 1), mid, p.end});
      stack.push_back({static_cast<std::size_t>(left), p.begin, mid});
    }
    return std::move(tree_);
  }

 private:
  bool find_split(std::size_t node, std::size_t begin, std::size_t end, const std::vector<std::uint32_t>& counts,
                  SplitCandidate& best) {
    const auto n = static_cast<std::uint32_t>(end - begin);
    const double parent_entropy = entropy(counts.data(), n_classes_, n);
    // Partial Fisher-Yates: the first max_features_ entries are the draw.
    for (std::size_t i = 0; i < max_features_; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(features_.size() - i));
      std::swap(features_[i], features_[j]);
    }
    bool found = false;
    for (std::size_t i = 0; i < max_features_; ++i) {
      const Eigen::Index f = features_[i];
      const double* col = x_.col(f).data();
      double lo = col[samples_[begin]];
      double hi = lo;
      for (std::size_t s = begin + 1; s < end; ++s) {
        const double v = col[samples_[s]];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) continue;
      double threshold = rng_.uniform(lo, hi);
      if (threshold >= hi) threshold = lo;

      std::fill(left_counts_.begin(), left_counts_.end(), 0);
      std::uint32_t n_left = 0;
      for (std::size_t s = begin; s < end; ++s) {
        if (col[samples_[s]] <= threshold) {
          ++left_counts_[static_cast<std::size_t>(y_[static_cast<std::size_t>(samples_[s])])];
          ++n_left;
        }
      }
      right_counts_.resize(n_classes_);
      for (std::size_t c = 0; c < n_classes_; ++c) right_counts_[c] = counts[c] - left_counts_[c];
      const std::uint32_t n_right = n - n_left;
      const double gain = parent_entropy -
                          (static_cast<double>(n_left) * entropy(left_counts_.data(), n_classes_, n_left) +
                           static_cast<double>(n_right) * entropy(right_counts_.data(), n_classes_, n_right)) /
                              static_cast<double>(n);
      const SplitCandidate cand{static_cast<std::int32_t>(f), threshold, gain, lo, hi};
      if (audit_) tree_.audit[node].push_back(cand);
      if (!found || gain > best.gain) {
        best = cand;
        found = true;
      }
    }
    return found;
  }

  void make_leaf(std::size_t node, const std::vector<std::uint32_t>& counts) {
    TreeNode& leaf = tree_.nodes[node];
    leaf.feature = -1;
    leaf.histogram = static_cast<std::uint32_t>(tree_.histograms.size());
    tree_.histograms.insert(tree_.histograms.end(), counts.begin(), counts.end());
  }

  const ColMatrix& x_;
  const Labels& y_;
  std::size_t n_classes_;
  std::size_t max_features_;
  bool audit_;
  Rng rng_;
  std::vector<Eigen::Index> features_;
  std::vector<Eigen::Index> samples_;
  std::vector<std::uint32_t> left_counts_;
  std::vector<std::uint32_t> right_counts_;
  Tree tree_;
};

}  // namespace

void ForestConfig::validate() const {
  if (n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");
  if (!(max_features_fraction > 0.0 && max_features_fraction <= 1.0)) {
    throw ConfigError("forest: max_features_fraction must be in (0, 1]");
  }
}

std::size_t features_per_split(std::size_t n_features, double fraction) {
  const auto m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_features) - 1e-12));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n_features, 1));
}

ForestModel forest_fit(const FeatureMatrix& x, const Labels& y, std::size_t n_classes, const ForestConfig& config,
                       const Deadline& deadline) {
  check_fit_input(x.from_test, "forest_fit");
  config.validate();
  if (x.rows() != y.size()) throw ConfigError("forest_fit: row/label count mismatch");
  if (x.rows() < 2) throw ConfigError("forest_fit: needs at least 2 rows");
  if (x.cols() == 0) throw ConfigError("forest_fit: no features");
  if (n_classes < 2) throw ConfigError("forest_fit: single class problem, need at least 2 classes");
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw ConfigError("forest_fit: label out of range");
  }
  if (!x.values.allFinite()) throw DataError("forest_fit: non-finite feature values");

  ForestModel model;
  model.config = config;
  model.n_features = x.cols();
  model.n_classes = n_classes;
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  const ColMatrix columns = x.values;
  const std::size_t m = features_per_split(x.cols(), config.max_features_fraction);
  parallel_for(model.trees.size(), [&](std::size_t t) {
    deadline.check("forest_fit");
    TreeBuilder builder(columns, y, n_classes, m, config.audit, derive_seed(config.seed, t));
    model.trees[t] = builder.build();
  });
  return model;
}

Matrix forest_predict_proba(const ForestModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.n_features) {
    throw DataError("forest_predict_proba: expected " + std::to_string(model.n_features) + " columns, got " +
                    std::to_string(x.cols()));
  }
  Matrix probs = Matrix::Zero(x.values.rows(), static_cast<Eigen::Index>(model.n_classes));
  const double inv_trees = 1.0 / static_cast<double>(model.trees.size());
  parallel_for(x.rows(), [&](std::size_t r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (const Tree& tree : model.trees) {
      const TreeNode* node = &tree.nodes[0];
      while (!node->is_leaf()) {
        node = &tree.nodes[static_cast<std::size_t>(x.values(row, node->feature) <= node->threshold ? node->left
                                                                                                       : node->right)];
      }
      const double inv_n = 1.0 / static_cast<double>(node->n_samples);
      for (std::size_t c = 0; c < model.n_classes; ++c) {
        probs(row, static_cast<Eigen::Index>(c)) += tree.histograms[node->histogram + c] * inv_n * inv_trees;
      }
    }
  });
  return probs;
}

std::string forest_audit_dump(const ForestModel& model) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const Tree& tree = model.trees[t];
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& node = tree.nodes[i];
      out << "tree " << t << " node " << i << " n=" << node.n_samples;
      if (node.is_leaf()) {
        out << " leaf hist=";
        for (std::size_t c = 0; c < model.n_classes; ++c) {
          out << (c ? "," : "") << tree.histograms[node.histogram + c];
        }
        out << '\n';
        continue;
      }
      out << " split feature=" << node.feature << " threshold=" << node.threshold << " left=" << node.left
          << " right=" << node.right << '\n';
      if (i < tree.audit.size()) {
        for (const auto& c : tree.audit[i]) {
          out << "  candidate feature=" << c.feature << " threshold=" << c.threshold << " gain=" << c.gain
              << " range=[" << c.feature_min << "," << c.feature_max << "]\n";
        }
      }
    }
  }
  return out.str();
}

void ForestModel::save(std::ostream& out) const {
  io::write_magic(out, kForestMagic, kForestVersion);
  io::write(out, static_cast<std::int32_t>(config.n_trees));
  io::write(out, config.max_features_fraction);
  io::write(out, config.seed);
  io::write(out, static_cast<std::uint64_t>(n_features));
  io::write(out, static_cast<std::uint64_t>(n_classes));
  for (const Tree& tree : trees) {
    io::write(out, static_cast<std::uint64_t>(tree.nodes.size()));
    for (const TreeNode& n : tree.nodes) {
      io::write(out, n.feature);
      io::write(out, n.threshold);
      io::write(out, n.left);
      io::write(out, n.right);
      io::write(out, n.n_samples);
      io::write(out, n.histogram);
    }
    io::write_vector(out, tree.histograms);
  }
}

ForestModel ForestModel::load(std::istream& in) {
  io::read_magic(in, kForestMagic, kForestVersion);
  ForestModel m;
  m.config.n_trees = io::read<std::int32_t>(in, "n_trees");
  m.config.max_features_fraction = io::read<double>(in, "max_features_fraction");
  m.config.seed = io::read<std::uint64_t>(in, "seed");
  m.config.validate();
  m.n_features = io::read<std::uint64_t>(in, "n_features");
  m.n_classes = io::read<std::uint64_t>(in, "n_classes");
  m.trees.resize(static_cast<std::size_t>(m.config.n_trees));
  for (Tree& tree : m.trees) {
    const auto n_nodes = io::read<std::uint64_t>(in, "node count");
    if (n_nodes == 0 || n_nodes > (1ULL << 32)) throw DataError("forest blob: implausible node count");
    tree.nodes.resize(n_nodes);
    for (TreeNode& n : tree.nodes) {
      n.feature = io::read<std::int32_t>(in, "feature");
      n.threshold = io::read<double>(in, "threshold");
      n.left = io::read<std::int32_t>(in, "left");
      n.right = io::read<std::int32_t>(in, "right");
      n.n_samples = io::read<std::uint32_t>(in, "n_samples");
      n.histogram = io::read<std::uint32_t>(in, "histogram");
    }
    tree.histograms = io::read_vector<std::uint32_t>(in, "histograms");
    for (const TreeNode& n : tree.nodes) {
      const bool bad = n.is_leaf() ? n.histogram + m.n_classes > tree.histograms.size()
                                   : (n.left < 0 || n.right < 0 || static_cast<std::uint64_t>(n.left) >= n_nodes ||
                                      static_cast<std::uint64_t>(n.right) >= n_nodes ||
                                      static_cast<std::uint64_t>(n.feature) >= m.n_features);
      if (bad) throw DataError("forest blob: corrupt node");
    }
  }
  return m;
}

}  // namespace hq
