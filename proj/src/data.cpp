#include "hq/data.hpp"

#include "hq/binary_io.hpp"
#include "hq/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace hq {

namespace {

constexpr char kDatasetMagic[4] = {'T', 'S', 'D', '1'};

std::string instance_msg(const std::string& what, std::size_t i) {
  return what + " at instance " + std::to_string(i);
}

/// Maps raw labels onto {0..c-1}, ascending by original value.
void remap_labels(Dataset& d, const std::vector<std::int64_t>& raw) {
  std::vector<std::int64_t> values = raw;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  d.label_values = values;
  d.y.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    d.y[i] = static_cast<int>(std::lower_bound(values.begin(), values.end(), raw[i]) - values.begin());
  }
}

Dataset read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kDatasetMagic)) {
    throw DataError("malformed header: bad magic in " + path.string());
  }
  Dataset d;
  d.n_instances = io::read<std::uint64_t>(in, "n_instances");
  d.n_channels = io::read<std::uint64_t>(in, "n_channels");
  d.series_length = io::read<std::uint64_t>(in, "series_length");
  const auto n_labels = io::read<std::uint64_t>(in, "n_labels_present");
  if (d.n_instances == 0 || d.n_channels == 0 || d.series_length == 0) {
    throw DataError("malformed header: zero dimension in " + path.string());
  }
  const std::uint64_t cells = d.n_instances * d.n_channels * d.series_length;
  if (cells / d.n_instances / d.n_channels != d.series_length || cells > (1ULL << 36)) {
    throw DataError("malformed header: implausible dimensions in " + path.string());
  }
  const auto payload = static_cast<std::uint64_t>(cells * sizeof(float) + d.n_instances * sizeof(std::int64_t));
  const auto here = static_cast<std::uint64_t>(in.tellg());
  const auto size = std::filesystem::file_size(path);
  if (size != here + payload) {
    throw DataError("dimension mismatch: header declares " + std::to_string(here + payload) +
                    " bytes but file has " + std::to_string(size));
  }
  d.x.resize(cells);
  io::read_array(in, d.x.data(), cells, "data");
  std::vector<std::int64_t> raw(d.n_instances);
  io::read_array(in, raw.data(), raw.size(), "labels");
  remap_labels(d, raw);
  if (d.label_values.size() != n_labels) {
    throw DataError("malformed header: declares " + std::to_string(n_labels) + " labels but " +
                    std::to_string(d.label_values.size()) + " are present");
  }
  return d;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Dataset d;
  d.n_channels = 1;
  std::vector<std::int64_t> raw;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_double(fields[i], values[i]);
    if (first) {
      first = false;
      if (!numeric) continue;  // header row
    }
    if (!numeric) throw DataError("malformed csv: non-numeric field on line " + std::to_string(line_no));
    if (values.size() < 2) throw DataError("malformed csv: need at least one value and a label");
    const std::size_t len = values.size() - 1;
    if (d.n_instances == 0) {
      d.series_length = len;
    } else if (len != d.series_length) {
      throw DataError("dimension mismatch: " + instance_msg("row length " + std::to_string(len), d.n_instances) +
                      ", expected " + std::to_string(d.series_length));
    }
    const double label = values.back();
    if (!std::isfinite(label) || label != std::floor(label)) {
      throw DataError(instance_msg("non-integer label", d.n_instances));
    }
    raw.push_back(static_cast<std::int64_t>(label));
    for (std::size_t t = 0; t < len; ++t) d.x.push_back(static_cast<float>(values[t]));
    ++d.n_instances;
  }
  if (d.n_instances == 0) throw DataError("empty csv " + path.string());
  remap_labels(d, raw);
  return d;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.split = split;
  out.n_instances = indices.size();
  out.n_channels = n_channels;
  out.series_length = series_length;
  out.label_values = label_values;
  const std::size_t stride = n_channels * series_length;
  out.x.resize(indices.size() * stride);
  out.y.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    if (i >= n_instances) throw ConfigError("subset index out of range");
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * stride), stride,
                out.x.begin() + static_cast<std::ptrdiff_t>(r * stride));
    out.y[r] = y[i];
  }
  return out;
}

void validate(const Dataset& d, bool require_all_classes) {
  if (d.n_instances < 2) throw DataError("dataset needs at least 2 instances");
  if (d.n_channels < 1 || d.series_length < 1) throw DataError("dataset has an empty dimension");
  if (d.x.size() != d.n_instances * d.n_channels * d.series_length || d.y.size() != d.n_instances) {
    throw DataError("dimension mismatch between header and payload");
  }
  const std::size_t stride = d.n_channels * d.series_length;
  for (std::size_t i = 0; i < d.n_instances; ++i) {
    for (std::size_t j = 0; j < stride; ++j) {
      if (!std::isfinite(d.x[i * stride + j])) throw DataError(instance_msg("non-finite values", i));
    }
  }
  const std::size_t c = d.n_classes();
  std::vector<std::size_t> counts(c, 0);
  for (std::size_t i = 0; i < d.n_instances; ++i) {
    if (d.y[i] < 0 || static_cast<std::size_t>(d.y[i]) >= c) throw DataError(instance_msg("label out of range", i));
    ++counts[static_cast<std::size_t>(d.y[i])];
  }
  if (require_all_classes) {
    if (c < 2) throw DataError("single-class data: at least 2 classes are required");
    for (std::size_t k = 0; k < c; ++k) {
      if (counts[k] == 0) throw DataError("class " + std::to_string(d.label_values[k]) + " has no instances");
    }
  }
}

Layout layout_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? Layout::csv : Layout::binary;
}

Dataset load_dataset(const std::filesystem::path& path, Layout layout) {
  Dataset d = layout == Layout::binary ? read_binary(path) : read_csv(path);
  d.name = path.stem().string();
  validate(d, true);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) { return load_dataset(path, layout_for(path)); }

DatasetPair load_pair(const std::filesystem::path& train_path, const std::filesystem::path& test_path) {
  DatasetPair pair;
  pair.train = load_dataset(train_path);
  pair.train.split = Split::train;

  const Layout layout = layout_for(test_path);
  Dataset test = layout == Layout::binary ? read_binary(test_path) : read_csv(test_path);
  if (test.n_channels != pair.train.n_channels || test.series_length != pair.train.series_length) {
    throw DataError("dimension mismatch: test split shape differs from train split");
  }
  const auto& mapping = pair.train.label_values;
  for (std::size_t i = 0; i < test.n_instances; ++i) {
    const std::int64_t original = test.label_values[static_cast<std::size_t>(test.y[i])];
    const auto it = std::lower_bound(mapping.begin(), mapping.end(), original);
    if (it == mapping.end() || *it != original) {
      throw DataError(instance_msg("test label " + std::to_string(original) + " not present in train", i));
    }
    test.y[i] = static_cast<int>(it - mapping.begin());
  }
  test.label_values = mapping;
  test.split = Split::test;
  validate(test, false);

  std::string name = train_path.stem().string();
  if (name.size() > 6 && name.ends_with("_TRAIN")) name.resize(name.size() - 6);
  pair.train.name = name;
  test.name = name;
  pair.test = std::move(test);
  return pair;
}

DatasetPair load_pair(const std::filesystem::path& stem) {
  for (const char* ext : {".tsd", ".csv"}) {
    std::filesystem::path train = stem.string() + "_TRAIN" + ext;
    std::filesystem::path test = stem.string() + "_TEST" + ext;
    if (std::filesystem::exists(train) && std::filesystem::exists(test)) return load_pair(train, test);
  }
  throw DataError("no <stem>_TRAIN/_TEST .tsd or .csv pair found for " + stem.string());
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kDatasetMagic, 4);
  std::vector<char> present(d.n_classes(), 0);
  for (int label : d.y) present[static_cast<std::size_t>(label)] = 1;
  const auto n_present = static_cast<std::uint64_t>(std::count(present.begin(), present.end(), 1));
  io::write(out, static_cast<std::uint64_t>(d.n_instances));
  io::write(out, static_cast<std::uint64_t>(d.n_channels));
  io::write(out, static_cast<std::uint64_t>(d.series_length));
  io::write(out, n_present);
  io::write_array(out, d.x.data(), d.x.size());
  std::vector<std::int64_t> raw(d.n_instances);
  for (std::size_t i = 0; i < d.n_instances; ++i) raw[i] = d.label_values[static_cast<std::size_t>(d.y[i])];
  io::write_array(out, raw.data(), raw.size());
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<std::size_t> FoldAssignment::held_out(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::training(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment stratified_kfold(const Labels& y, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold needs k >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw ConfigError("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                        " members, fewer than k=" + std::to_string(k));
    }
  }
  FoldAssignment folds;
  folds.k = k;
  folds.seed = seed;
  folds.fold_of.assign(y.size(), -1);
  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(std::span(members));
    for (std::size_t j = 0; j < members.size(); ++j) {
      folds.fold_of[members[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
    }
    offset = (offset + members.size()) % static_cast<std::size_t>(k);
  }
  return folds;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (cap >= n) return idx;
  // Partial Fisher-Yates: the first `cap` slots become a uniform sample.
  Rng rng(seed);
  for (std::size_t i = 0; i < cap; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace hq
