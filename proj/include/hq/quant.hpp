#pragma once

#include "hq/data.hpp"
#include "hq/features.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hq {

struct QuantConfig {
  int depth = 6;
  int divisor = 4;
  int smoothing_window = 5;

  void validate() const;
};

/// Half-open index range [start, end).
struct Interval {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

using IntervalSet = std::vector<Interval>;

/// Dyadic partition of [0, length) at levels 0..depth-1 (while 2^level <=
/// length), remainder elements going to the leading intervals. Levels >= 1
/// also get every partition interval shifted right by ceil(length / 2^(level+1)),
/// keeping only shifts that stay in range. Duplicates are dropped, first
/// occurrence wins.
IntervalSet dyadic_intervals(std::size_t length, int depth);

/// 1 + floor((m - 1) / v).
std::size_t quantile_count(std::size_t m, int divisor);

/// k evenly spaced quantiles (probabilities i/(k-1)) with linear
/// interpolation between order statistics, or the median when k == 1. The
/// interval mean is subtracted from entries at odd positions.
std::vector<double> interval_quantiles(std::span<const double> values, std::size_t k);

enum class Representation : int { original = 0, smoothed_diff = 1, second_diff = 2, fft_magnitude = 3 };
inline constexpr std::size_t kRepresentationCount = 4;

std::string to_string(Representation r);

/// The four series views. A view that the series is too short to produce is
/// left empty and explained in `notes`.
struct Representations {
  std::array<std::optional<std::vector<double>>, kRepresentationCount> views;
  std::vector<std::string> notes;
};

/// original; moving average (valid mode) of the first difference; second
/// difference; |rfft| (unnormalised, floor(n/2)+1 bins).
Representations representations(std::span<const double> series, int smoothing_window);

/// Length of each representation for a series of the given length, or
/// nullopt when that representation is omitted.
std::array<std::optional<std::size_t>, kRepresentationCount> representation_lengths(std::size_t series_length,
                                                                                    int smoothing_window);

/// Number of columns quant_transform produces for this shape.
std::size_t quant_feature_count(std::size_t series_length, std::size_t n_channels, const QuantConfig& config);

/// Per instance and channel, concatenated over representations and their
/// dyadic intervals: interval_quantiles with quantile_count(m, v) entries.
FeatureMatrix quant_transform(const QuantConfig& config, const Dataset& d);

}  // namespace hq
