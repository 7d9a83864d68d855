#pragma once

#include "hq/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hq {

enum class FeatureSource : std::uint8_t { hydra = 0, quant = 1, logits = 2 };

std::string to_string(FeatureSource s);

/// Provenance of one feature column. Tag meaning depends on the source:
///   hydra:  {dilation index, group, kernel, statistic (0 hard, 1 soft), 0}
///   quant:  {channel, representation, interval start, interval end, quantile}
///   logits: {base model, class, 0, 0, 0}
struct ColumnInfo {
  FeatureSource source = FeatureSource::hydra;
  std::array<std::int32_t, 5> tag{};

  bool operator==(const ColumnInfo&) const = default;
};

/// Dense n x d feature block with per-column provenance.
///
/// `from_test` marks data derived from a test split and is carried through
/// every derived matrix so fit routines can refuse it under a TaintGuard.
struct FeatureMatrix {
  Matrix values;
  std::vector<ColumnInfo> columns;
  bool from_test = false;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

/// [a | b]; row counts must agree.
FeatureMatrix hconcat(const FeatureMatrix& a, const FeatureMatrix& b);

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows);

/// Wraps a probability/score matrix as logit features of the given base.
FeatureMatrix logit_features(const Matrix& values, std::int32_t base, bool from_test);

void write_features(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_features(std::istream& in);
void save_features(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace hq
