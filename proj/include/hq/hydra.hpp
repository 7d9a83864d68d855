#pragma once

#include "hq/data.hpp"
#include "hq/features.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace hq {

struct HydraConfig {
  int groups = 64;
  int kernels_per_group = 8;
  int kernel_length = 9;
  std::uint64_t seed = 42;

  /// Throws ConfigError unless groups >= 1, kernels_per_group >= 2 and
  /// kernel_length is odd and >= 3.
  void validate() const;
};

/// Exponential dilation schedule 1, 2, 4, ..., 2^dmax with
/// dmax = floor(log2((series_length - 1) / (kernel_length - 1))).
std::vector<int> compute_dilations(std::size_t series_length, int kernel_length);

/// Fitted competing-kernel transform.
///
/// Kernels are organised as [dilation][group][kernel][channel][tap]. At every
/// time point the kernels of a group compete on absolute response; the winner
/// (lowest index on ties) gets one hard count and its magnitude added to its
/// soft count. Convolutions use zero padding so all series_length points
/// take part. Each group sums the responses of its own channel subset.
class HydraTransform {
 public:
  /// Draws kernels and channel subsets. Depends only on the config and the
  /// data shape, never on data values.
  static HydraTransform initialize(const HydraConfig& config, std::size_t n_channels, std::size_t series_length);

  /// initialize() followed by fit_normalization() on the training counts.
  static HydraTransform fit(const HydraConfig& config, const Dataset& train);

  /// Hand-set kernels. `weights` has n_dilations*g*k*channels_per_group*len
  /// entries; `channel_selection` has g*channels_per_group entries.
  static HydraTransform from_weights(const HydraConfig& config, std::size_t n_channels, std::size_t series_length,
                                     std::vector<double> weights, std::vector<int> channel_selection);

  /// Unnormalised hard and soft counts, n x n_features.
  FeatureMatrix raw_features(const Dataset& d) const;

  /// Per-column mean and (std + 1e-8) from training counts.
  void fit_normalization(const FeatureMatrix& raw);
  FeatureMatrix normalize(FeatureMatrix raw) const;

  /// raw_features() then normalize(); requires fitted normalization.
  FeatureMatrix transform(const Dataset& d) const;

  const HydraConfig& config() const { return config_; }
  const std::vector<int>& dilations() const { return dilations_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<int>& channel_selection() const { return channel_selection_; }
  const Vector& feature_mean() const { return mean_; }
  const Vector& feature_scale() const { return scale_; }
  bool has_normalization() const { return mean_.size() > 0; }
  std::size_t n_channels() const { return n_channels_; }
  std::size_t series_length() const { return series_length_; }
  std::size_t channels_per_group() const { return channels_per_group_; }
  std::size_t n_features() const;

  double weight(std::size_t dilation, std::size_t group, std::size_t kernel, std::size_t channel,
                std::size_t tap) const;

  void save(std::ostream& out) const;
  static HydraTransform load(std::istream& in);

 private:
  HydraTransform() = default;
  void compute_row(const Dataset& d, std::size_t instance, double* out) const;

  HydraConfig config_;
  std::size_t n_channels_ = 0;
  std::size_t series_length_ = 0;
  std::size_t channels_per_group_ = 0;
  std::vector<int> dilations_;
  std::vector<double> weights_;
  std::vector<int> channel_selection_;
  Vector mean_;
  Vector scale_;
};

}  // namespace hq
