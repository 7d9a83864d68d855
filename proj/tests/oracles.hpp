#pragma once

#include "hq/ensembles.hpp"
#include "hq/hydra.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace hq::testing {

// Straight transcription of the competing-kernel definition: zero-padded
// dilated correlation centred on t, argmax of |response| with ties to the
// lowest kernel, hard and soft accumulation.
inline std::vector<double> hydra_brute_force(const HydraTransform& t, const Dataset& d, std::size_t instance) {
  const auto& cfg = t.config();
  const std::size_t L = d.series_length;
  const int half = cfg.kernel_length / 2;
  std::vector<double> out;
  for (std::size_t di = 0; di < t.dilations().size(); ++di) {
    const int dil = t.dilations()[di];
    for (int g = 0; g < cfg.groups; ++g) {
      std::vector<double> hard(static_cast<std::size_t>(cfg.kernels_per_group), 0.0);
      std::vector<double> soft(hard.size(), 0.0);
      for (std::size_t time = 0; time < L; ++time) {
        int best = -1;
        double best_mag = -1.0;
        for (int k = 0; k < cfg.kernels_per_group; ++k) {
          double r = 0.0;
          for (std::size_t c = 0; c < t.channels_per_group(); ++c) {
            const int channel = t.channel_selection()[static_cast<std::size_t>(g) * t.channels_per_group() + c];
            const auto s = d.series(instance, static_cast<std::size_t>(channel));
            for (int j = 0; j < cfg.kernel_length; ++j) {
              const long idx = static_cast<long>(time) + static_cast<long>(j - half) * dil;
              if (idx < 0 || idx >= static_cast<long>(L)) continue;
              r += t.weight(di, static_cast<std::size_t>(g), static_cast<std::size_t>(k), c,
                            static_cast<std::size_t>(j)) *
                   s[static_cast<std::size_t>(idx)];
            }
          }
          if (std::abs(r) > best_mag) {
            best = k;
            best_mag = std::abs(r);
          }
        }
        hard[static_cast<std::size_t>(best)] += 1.0;
        soft[static_cast<std::size_t>(best)] += best_mag;
      }
      for (std::size_t k = 0; k < hard.size(); ++k) {
        out.push_back(hard[k]);
        out.push_back(soft[k]);
      }
    }
  }
  return out;
}

// Remembers its training rows by their first feature value and answers
// with their label for rows it has seen, uniform otherwise.
inline Matrix memorize(const FeatureMatrix& fit_x, const Labels& fit_y, const FeatureMatrix& predict_x, std::size_t c) {
  std::map<double, int> seen;
  for (std::size_t i = 0; i < fit_y.size(); ++i) seen[fit_x.values(static_cast<Eigen::Index>(i), 0)] = fit_y[i];
  Matrix out = Matrix::Constant(predict_x.values.rows(), static_cast<Eigen::Index>(c), 1.0 / static_cast<double>(c));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const auto it = seen.find(predict_x.values(r, 0));
    if (it != seen.end()) {
      out.row(r).setZero();
      out(r, it->second) = 1.0;
    }
  }
  return out;
}

inline double sorted_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

inline double median_oracle(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace hq::testing
