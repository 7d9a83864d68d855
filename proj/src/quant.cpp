#include "hq/quant.hpp"

#include "hq/parallel.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>

namespace hq {

void QuantConfig::validate() const {
  if (depth < 1) throw ConfigError("quant: depth must be >= 1");
  if (divisor < 1) throw ConfigError("quant: divisor must be >= 1");
  if (smoothing_window < 1) throw ConfigError("quant: smoothing_window must be >= 1");
}

std::string to_string(Representation r) {
  switch (r) {
    case Representation::original: return "original";
    case Representation::smoothed_diff: return "smoothed_diff";
    case Representation::second_diff: return "second_diff";
    case Representation::fft_magnitude: return "fft_magnitude";
  }
  return "unknown";
}

IntervalSet dyadic_intervals(std::size_t length, int depth) {
  IntervalSet out;
  if (length == 0) return out;
  auto add = [&out](Interval iv) {
    if (std::find(out.begin(), out.end(), iv) == out.end()) out.push_back(iv);
  };
  for (int level = 0; level < depth; ++level) {
    const std::size_t parts = std::size_t{1} << level;
    if (parts > length) break;
    const std::size_t base = length / parts;
    const std::size_t extra = length % parts;
    IntervalSet level_parts;
    std::size_t start = 0;
    for (std::size_t p = 0; p < parts; ++p) {
      const std::size_t width = base + (p < extra ? 1 : 0);
      level_parts.push_back({start, start + width});
      start += width;
    }
    for (const auto& iv : level_parts) add(iv);
    if (level >= 1) {
      const std::size_t shift = (length + 2 * parts - 1) / (2 * parts);
      for (const auto& iv : level_parts) {
        if (iv.end + shift <= length) add({iv.start + shift, iv.end + shift});
      }
    }
  }
  return out;
}

std::size_t quantile_count(std::size_t m, int divisor) {
  if (m < 1 || divisor < 1) throw ConfigError("quantile_count: m and divisor must be >= 1");
  return 1 + (m - 1) / static_cast<std::size_t>(divisor);
}

std::vector<double> interval_quantiles(std::span<const double> values, std::size_t k) {
  if (values.empty()) throw ConfigError("interval_quantiles: empty interval");
  if (k < 1) throw ConfigError("interval_quantiles: k must be >= 1");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(m - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, m - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };
  if (k == 1) return {at(0.5)};

  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(m);
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = at(static_cast<double>(i) / static_cast<double>(k - 1));
    if (i % 2 == 1) out[i] -= mean;
  }
  return out;
}

std::array<std::optional<std::size_t>, kRepresentationCount> representation_lengths(std::size_t n,
                                                                                    int smoothing_window) {
  const auto w = static_cast<std::size_t>(smoothing_window);
  std::array<std::optional<std::size_t>, kRepresentationCount> out;
  if (n >= 1) out[0] = n;
  if (n >= 1 && n - 1 >= w && n - w >= 1) out[1] = n - w;
  if (n >= 3) out[2] = n - 2;
  if (n >= 1) out[3] = n / 2 + 1;
  return out;
}

Representations representations(std::span<const double> series, int smoothing_window) {
  if (smoothing_window < 1) throw ConfigError("representations: smoothing_window must be >= 1");
  const std::size_t n = series.size();
  const auto w = static_cast<std::size_t>(smoothing_window);
  const auto lengths = representation_lengths(n, smoothing_window);
  Representations r;

  r.views[0] = std::vector<double>(series.begin(), series.end());

  if (lengths[1]) {
    std::vector<double> diff(n - 1);
    for (std::size_t t = 0; t + 1 < n; ++t) diff[t] = series[t + 1] - series[t];
    std::vector<double> smooth(*lengths[1]);
    for (std::size_t t = 0; t < smooth.size(); ++t) {
      double s = 0.0;
      for (std::size_t j = 0; j < w; ++j) s += diff[t + j];
      smooth[t] = s / static_cast<double>(w);
    }
    r.views[1] = std::move(smooth);
  } else {
    r.notes.push_back("smoothed_diff omitted: series length " + std::to_string(n) + " leaves no full window of " +
                      std::to_string(w) + " differences");
  }

  if (lengths[2]) {
    std::vector<double> d2(*lengths[2]);
    for (std::size_t t = 0; t < d2.size(); ++t) d2[t] = series[t + 2] - 2.0 * series[t + 1] + series[t];
    r.views[2] = std::move(d2);
  } else {
    r.notes.push_back("second_diff omitted: series length " + std::to_string(n) + " < 3");
  }

  if (lengths[3] && n == 1) {
    // Eigen's real FFT does not handle a single sample.
    r.views[3] = std::vector<double>{std::abs(series[0])};
  } else if (lengths[3]) {
    Eigen::FFT<double> fft;
    std::vector<double> input(series.begin(), series.end());
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, input);
    std::vector<double> mag(*lengths[3]);
    for (std::size_t f = 0; f < mag.size(); ++f) mag[f] = std::abs(spectrum[f]);
    r.views[3] = std::move(mag);
  }
  return r;
}

std::size_t quant_feature_count(std::size_t series_length, std::size_t n_channels, const QuantConfig& config) {
  config.validate();
  std::size_t per_channel = 0;
  for (const auto& len : representation_lengths(series_length, config.smoothing_window)) {
    if (!len) continue;
    for (const auto& iv : dyadic_intervals(*len, config.depth)) per_channel += quantile_count(iv.length(), config.divisor);
  }
  return per_channel * n_channels;
}

FeatureMatrix quant_transform(const QuantConfig& config, const Dataset& d) {
  config.validate();
  const auto lengths = representation_lengths(d.series_length, config.smoothing_window);
  std::array<IntervalSet, kRepresentationCount> intervals;
  for (std::size_t r = 0; r < kRepresentationCount; ++r) {
    if (lengths[r]) intervals[r] = dyadic_intervals(*lengths[r], config.depth);
  }

  FeatureMatrix m;
  m.from_test = d.is_test();
  for (std::size_t c = 0; c < d.n_channels; ++c) {
    for (std::size_t r = 0; r < kRepresentationCount; ++r) {
      for (const auto& iv : intervals[r]) {
        const std::size_t k = quantile_count(iv.length(), config.divisor);
        for (std::size_t q = 0; q < k; ++q) {
          m.columns.push_back({FeatureSource::quant,
                               {static_cast<std::int32_t>(c), static_cast<std::int32_t>(r),
                                static_cast<std::int32_t>(iv.start), static_cast<std::int32_t>(iv.end),
                                static_cast<std::int32_t>(q)}});
        }
      }
    }
  }
  m.values.resize(static_cast<Eigen::Index>(d.n_instances), static_cast<Eigen::Index>(m.columns.size()));

  parallel_for(d.n_instances, [&](std::size_t i) {
    double* row = m.values.row(static_cast<Eigen::Index>(i)).data();
    std::size_t col = 0;
    std::vector<double> series(d.series_length);
    for (std::size_t c = 0; c < d.n_channels; ++c) {
      const auto s = d.series(i, c);
      std::copy(s.begin(), s.end(), series.begin());
      const Representations reps = representations(series, config.smoothing_window);
      for (std::size_t r = 0; r < kRepresentationCount; ++r) {
        if (!reps.views[r]) continue;
        const std::vector<double>& view = *reps.views[r];
        for (const auto& iv : intervals[r]) {
          const auto q = interval_quantiles(std::span(view).subspan(iv.start, iv.length()),
                                            quantile_count(iv.length(), config.divisor));
          std::copy(q.begin(), q.end(), row + col);
          col += q.size();
        }
      }
    }
  });
  return m;
}

}  // namespace hq
