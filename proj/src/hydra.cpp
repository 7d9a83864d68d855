#include "hq/hydra.hpp"

#include "hq/binary_io.hpp"
#include "hq/parallel.hpp"
#include "hq/random.hpp"
#include "hq/run_control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hq {

namespace {
constexpr std::string_view kHydraMagic = "HQHT";
constexpr std::uint32_t kHydraVersion = 1;
constexpr std::size_t kMaxChannelsPerGroup = 3;
constexpr double kScaleEpsilon = 1e-8;
}  // namespace

void HydraConfig::validate() const {
  if (groups < 1) throw ConfigError("hydra: groups must be >= 1");
  if (kernels_per_group < 2) throw ConfigError("hydra: kernels_per_group must be >= 2 (competition needs two kernels)");
  if (kernel_length < 3 || kernel_length % 2 == 0) throw ConfigError("hydra: kernel_length must be odd and >= 3");
}

std::vector<int> compute_dilations(std::size_t series_length, int kernel_length) {
  if (kernel_length < 2) throw ConfigError("compute_dilations: kernel_length must be >= 2");
  const auto span = static_cast<std::size_t>(kernel_length - 1);
  if (series_length < static_cast<std::size_t>(kernel_length)) {
    throw ConfigError("series of length " + std::to_string(series_length) + " is shorter than kernel length " +
                      std::to_string(kernel_length));
  }
  // Largest d with 2^d * (kernel_length - 1) <= series_length - 1.
  std::vector<int> out{1};
  while (static_cast<std::size_t>(out.back()) * 2 * span <= series_length - 1) out.push_back(out.back() * 2);
  return out;
}

HydraTransform HydraTransform::initialize(const HydraConfig& config, std::size_t n_channels,
                                          std::size_t series_length) {
  config.validate();
  if (n_channels == 0) throw ConfigError("hydra: no channels");
  HydraTransform t;
  t.config_ = config;
  t.n_channels_ = n_channels;
  t.series_length_ = series_length;
  t.dilations_ = compute_dilations(series_length, config.kernel_length);
  t.channels_per_group_ = std::min(n_channels, kMaxChannelsPerGroup);

  const auto groups = static_cast<std::size_t>(config.groups);
  const auto kernels = static_cast<std::size_t>(config.kernels_per_group);
  const auto len = static_cast<std::size_t>(config.kernel_length);

  Rng weight_rng(derive_seed(config.seed, 0));
  t.weights_.resize(t.dilations_.size() * groups * kernels * t.channels_per_group_ * len);
  for (std::size_t base = 0; base < t.weights_.size(); base += len) {
    double sum = 0.0;
    for (std::size_t j = 0; j < len; ++j) sum += t.weights_[base + j] = weight_rng.normal();
    const double mean = sum / static_cast<double>(len);
    for (std::size_t j = 0; j < len; ++j) t.weights_[base + j] -= mean;
  }

  Rng channel_rng(derive_seed(config.seed, 1));
  std::vector<int> all(n_channels);
  std::iota(all.begin(), all.end(), 0);
  t.channel_selection_.reserve(groups * t.channels_per_group_);
  for (std::size_t g = 0; g < groups; ++g) {
    if (n_channels > t.channels_per_group_) channel_rng.shuffle(std::span(all));
    std::vector<int> chosen(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(t.channels_per_group_));
    std::sort(chosen.begin(), chosen.end());
    t.channel_selection_.insert(t.channel_selection_.end(), chosen.begin(), chosen.end());
  }
  return t;
}

HydraTransform HydraTransform::fit(const HydraConfig& config, const Dataset& train) {
  check_fit_input(train.is_test(), "hydra_fit");
  HydraTransform t = initialize(config, train.n_channels, train.series_length);
  t.fit_normalization(t.raw_features(train));
  return t;
}

HydraTransform HydraTransform::from_weights(const HydraConfig& config, std::size_t n_channels,
                                            std::size_t series_length, std::vector<double> weights,
                                            std::vector<int> channel_selection) {
  HydraTransform t = initialize(config, n_channels, series_length);
  if (weights.size() != t.weights_.size()) throw ConfigError("hydra: weight tensor has the wrong size");
  if (channel_selection.size() != t.channel_selection_.size()) {
    throw ConfigError("hydra: channel selection has the wrong size");
  }
  for (int c : channel_selection) {
    if (c < 0 || static_cast<std::size_t>(c) >= n_channels) throw ConfigError("hydra: channel index out of range");
  }
  t.weights_ = std::move(weights);
  t.channel_selection_ = std::move(channel_selection);
  return t;
}

std::size_t HydraTransform::n_features() const {
  return dilations_.size() * static_cast<std::size_t>(config_.groups) *
         static_cast<std::size_t>(config_.kernels_per_group) * 2;
}

double HydraTransform::weight(std::size_t dilation, std::size_t group, std::size_t kernel, std::size_t channel,
                              std::size_t tap) const {
  const auto groups = static_cast<std::size_t>(config_.groups);
  const auto kernels = static_cast<std::size_t>(config_.kernels_per_group);
  const auto len = static_cast<std::size_t>(config_.kernel_length);
  return weights_[(((dilation * groups + group) * kernels + kernel) * channels_per_group_ + channel) * len + tap];
}

void HydraTransform::compute_row(const Dataset& d, std::size_t instance, double* out) const {
  const std::size_t T = series_length_;
  const auto groups = static_cast<std::size_t>(config_.groups);
  const auto kernels = static_cast<std::size_t>(config_.kernels_per_group);
  const auto len = static_cast<std::size_t>(config_.kernel_length);
  const auto half = static_cast<std::ptrdiff_t>(len / 2);

  std::vector<std::vector<double>> series(n_channels_, std::vector<double>(T));
  for (std::size_t c = 0; c < n_channels_; ++c) {
    const auto s = d.series(instance, c);
    std::copy(s.begin(), s.end(), series[c].begin());
  }
  std::vector<double> response(kernels * T);

  for (std::size_t di = 0; di < dilations_.size(); ++di) {
    const std::ptrdiff_t dilation = dilations_[di];
    for (std::size_t g = 0; g < groups; ++g) {
      std::fill(response.begin(), response.end(), 0.0);
      for (std::size_t k = 0; k < kernels; ++k) {
        double* r = response.data() + k * T;
        for (std::size_t c = 0; c < channels_per_group_; ++c) {
          const double* x = series[static_cast<std::size_t>(channel_selection_[g * channels_per_group_ + c])].data();
          for (std::size_t j = 0; j < len; ++j) {
            const double w = weight(di, g, k, c, j);
            const std::ptrdiff_t offset = (static_cast<std::ptrdiff_t>(j) - half) * dilation;
            const auto begin = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -offset));
            const auto end = static_cast<std::size_t>(
                std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(T) - offset, 0, static_cast<std::ptrdiff_t>(T)));
            for (std::size_t t = begin; t < end; ++t) r[t] += w * x[static_cast<std::ptrdiff_t>(t) + offset];
          }
        }
      }
      double* row = out + (di * groups + g) * kernels * 2;
      for (std::size_t t = 0; t < T; ++t) {
        std::size_t best = 0;
        double best_mag = std::abs(response[t]);
        for (std::size_t k = 1; k < kernels; ++k) {
          const double mag = std::abs(response[k * T + t]);
          if (mag > best_mag) {
            best = k;
            best_mag = mag;
          }
        }
        row[best * 2] += 1.0;
        row[best * 2 + 1] += best_mag;
      }
    }
  }
}

FeatureMatrix HydraTransform::raw_features(const Dataset& d) const {
  if (d.n_channels != n_channels_ || d.series_length != series_length_) {
    throw DataError("hydra: dimension mismatch (fitted on " + std::to_string(n_channels_) + "x" +
                    std::to_string(series_length_) + ", got " + std::to_string(d.n_channels) + "x" +
                    std::to_string(d.series_length) + ")");
  }
  FeatureMatrix m;
  m.from_test = d.is_test();
  const std::size_t width = n_features();
  m.values = Matrix::Zero(static_cast<Eigen::Index>(d.n_instances), static_cast<Eigen::Index>(width));
  parallel_for(d.n_instances, [&](std::size_t i) { compute_row(d, i, m.values.row(static_cast<Eigen::Index>(i)).data()); });

  m.columns.reserve(width);
  for (std::size_t di = 0; di < dilations_.size(); ++di) {
    for (int g = 0; g < config_.groups; ++g) {
      for (int k = 0; k < config_.kernels_per_group; ++k) {
        for (int stat = 0; stat < 2; ++stat) {
          m.columns.push_back({FeatureSource::hydra, {static_cast<std::int32_t>(di), g, k, stat, 0}});
        }
      }
    }
  }
  return m;
}

void HydraTransform::fit_normalization(const FeatureMatrix& raw) {
  check_fit_input(raw.from_test, "hydra normalization");
  if (raw.cols() != n_features()) throw DataError("hydra: normalization input has the wrong width");
  if (raw.rows() == 0) throw DataError("hydra: cannot fit normalization on zero rows");
  const auto n = static_cast<double>(raw.rows());
  mean_ = raw.values.colwise().sum().transpose() / n;
  scale_.resize(mean_.size());
  for (Eigen::Index j = 0; j < mean_.size(); ++j) {
    const double var = (raw.values.col(j).array() - mean_(j)).square().sum() / n;
    scale_(j) = std::sqrt(var) + kScaleEpsilon;
  }
}

FeatureMatrix HydraTransform::normalize(FeatureMatrix raw) const {
  if (!has_normalization()) throw ConfigError("hydra: normalization has not been fitted");
  if (raw.cols() != n_features()) throw DataError("hydra: normalize input has the wrong width");
  raw.values.rowwise() -= mean_.transpose();
  raw.values.array().rowwise() /= scale_.transpose().array();
  return raw;
}

FeatureMatrix HydraTransform::transform(const Dataset& d) const { return normalize(raw_features(d)); }

// Layout: magic, version, config (i32 g, i32 k, i32 len, u64 seed), u64
// n_channels, u64 series_length, dilations, channel selection, weights, u8
// has_normalization, [mean, scale].
void HydraTransform::save(std::ostream& out) const {
  io::write_magic(out, kHydraMagic, kHydraVersion);
  io::write(out, static_cast<std::int32_t>(config_.groups));
  io::write(out, static_cast<std::int32_t>(config_.kernels_per_group));
  io::write(out, static_cast<std::int32_t>(config_.kernel_length));
  io::write(out, config_.seed);
  io::write(out, static_cast<std::uint64_t>(n_channels_));
  io::write(out, static_cast<std::uint64_t>(series_length_));
  io::write_vector(out, dilations_);
  io::write_vector(out, channel_selection_);
  io::write_vector(out, weights_);
  io::write(out, static_cast<std::uint8_t>(has_normalization()));
  if (has_normalization()) {
    io::write_vector(out, std::vector<double>(mean_.begin(), mean_.end()));
    io::write_vector(out, std::vector<double>(scale_.begin(), scale_.end()));
  }
}

HydraTransform HydraTransform::load(std::istream& in) {
  io::read_magic(in, kHydraMagic, kHydraVersion);
  HydraConfig config;
  config.groups = io::read<std::int32_t>(in, "groups");
  config.kernels_per_group = io::read<std::int32_t>(in, "kernels_per_group");
  config.kernel_length = io::read<std::int32_t>(in, "kernel_length");
  config.seed = io::read<std::uint64_t>(in, "seed");
  const auto n_channels = io::read<std::uint64_t>(in, "n_channels");
  const auto series_length = io::read<std::uint64_t>(in, "series_length");
  HydraTransform t = initialize(config, n_channels, series_length);
  if (io::read_vector<int>(in, "dilations") != t.dilations_) throw DataError("hydra blob: dilation schedule mismatch");
  auto selection = io::read_vector<int>(in, "channel selection");
  auto weights = io::read_vector<double>(in, "weights");
  t = from_weights(config, n_channels, series_length, std::move(weights), std::move(selection));
  if (io::read<std::uint8_t>(in, "normalization flag") != 0) {
    const auto mean = io::read_vector<double>(in, "mean");
    const auto scale = io::read_vector<double>(in, "scale");
    if (mean.size() != t.n_features() || scale.size() != t.n_features()) {
      throw DataError("hydra blob: normalization size mismatch");
    }
    t.mean_ = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    t.scale_ = Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  }
  return t;
}

}  // namespace hq
