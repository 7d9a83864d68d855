#pragma once

#include "hq/data.hpp"
#include "hq/random.hpp"

#include <filesystem>
#include <string>

namespace hq::testing {

/// Gaussian series with labels i % classes.
inline Dataset random_dataset(std::size_t n, std::size_t channels, std::size_t length, std::size_t classes,
                              std::uint64_t seed, Split split = Split::train) {
  Dataset d;
  d.name = "random";
  d.split = split;
  d.n_instances = n;
  d.n_channels = channels;
  d.series_length = length;
  d.x.resize(n * channels * length);
  Rng rng(seed);
  for (float& v : d.x) v = static_cast<float>(rng.normal());
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.y[i] = static_cast<int>(i % classes);
  for (std::size_t c = 0; c < classes; ++c) d.label_values.push_back(static_cast<std::int64_t>(c));
  return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hq_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace hq::testing
