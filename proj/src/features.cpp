#include "hq/features.hpp"

#include "hq/binary_io.hpp"

#include <fstream>

namespace hq {

namespace {
constexpr std::string_view kFeatureMagic = "HQFM";
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

std::string to_string(FeatureSource s) {
  switch (s) {
    case FeatureSource::hydra: return "hydra";
    case FeatureSource::quant: return "quant";
    case FeatureSource::logits: return "logits";
  }
  return "unknown";
}

FeatureMatrix hconcat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.rows() != b.rows()) throw ConfigError("hconcat: row count mismatch");
  FeatureMatrix out;
  out.values.resize(a.values.rows(), a.values.cols() + b.values.cols());
  out.values << a.values, b.values;
  out.columns = a.columns;
  out.columns.insert(out.columns.end(), b.columns.begin(), b.columns.end());
  out.from_test = a.from_test || b.from_test;
  return out;
}

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  FeatureMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), m.values.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= m.rows()) throw ConfigError("select_rows: index out of range");
    out.values.row(static_cast<Eigen::Index>(r)) = m.values.row(static_cast<Eigen::Index>(rows[r]));
  }
  out.columns = m.columns;
  out.from_test = m.from_test;
  return out;
}

FeatureMatrix logit_features(const Matrix& values, std::int32_t base, bool from_test) {
  FeatureMatrix out;
  out.values = values;
  out.from_test = from_test;
  out.columns.resize(static_cast<std::size_t>(values.cols()));
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    out.columns[c] = {FeatureSource::logits, {base, static_cast<std::int32_t>(c), 0, 0, 0}};
  }
  return out;
}

// Layout: magic, version, u8 from_test, u64 n_columns, per column
// {u8 source, i32 tag[5]}, then the matrix (u64 rows, u64 cols, f64 row-major).
void write_features(std::ostream& out, const FeatureMatrix& m) {
  io::write_magic(out, kFeatureMagic, kFeatureVersion);
  io::write(out, static_cast<std::uint8_t>(m.from_test));
  io::write(out, static_cast<std::uint64_t>(m.columns.size()));
  for (const auto& c : m.columns) {
    io::write(out, static_cast<std::uint8_t>(c.source));
    io::write_array(out, c.tag.data(), c.tag.size());
  }
  io::write_matrix(out, m.values);
}

FeatureMatrix read_features(std::istream& in) {
  io::read_magic(in, kFeatureMagic, kFeatureVersion);
  FeatureMatrix m;
  m.from_test = io::read<std::uint8_t>(in, "from_test") != 0;
  const auto n_cols = io::read<std::uint64_t>(in, "column count");
  if (n_cols > (1ULL << 32)) throw DataError("implausible column count");
  m.columns.resize(n_cols);
  for (auto& c : m.columns) {
    const auto source = io::read<std::uint8_t>(in, "column source");
    if (source > 2) throw DataError("unknown column source");
    c.source = static_cast<FeatureSource>(source);
    io::read_array(in, c.tag.data(), c.tag.size(), "column tag");
  }
  m.values = io::read_matrix(in, "feature values");
  if (m.cols() != m.columns.size()) throw DataError("feature blob: provenance/column count mismatch");
  return m;
}

void save_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_features(out, m);
  if (!out) throw DataError("write failed for " + path.string());
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_features(in);
}

}  // namespace hq
