#pragma once

#include "hq/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hq {

enum class Split : std::uint8_t { train, test };

/// Labelled fixed-length multichannel series collection.
///
/// Values are stored as float, row-major [instance][channel][time], which is
/// also the on-disk layout. Labels are contiguous class indices; the original
/// label of class i is label_values[i].
struct Dataset {
  std::string name;
  Split split = Split::train;
  std::size_t n_instances = 0;
  std::size_t n_channels = 0;
  std::size_t series_length = 0;
  std::vector<float> x;
  Labels y;
  std::vector<std::int64_t> label_values;

  std::size_t n_classes() const { return label_values.size(); }
  bool is_test() const { return split == Split::test; }

  std::span<const float> series(std::size_t instance, std::size_t channel) const {
    return {x.data() + (instance * n_channels + channel) * series_length, series_length};
  }

  /// Rows `indices` in the given order; keeps split tag and label mapping.
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Checks the structural invariants and that every value is finite.
/// `require_all_classes` additionally demands that each class occurs.
void validate(const Dataset& d, bool require_all_classes);

enum class Layout { binary, csv };

/// Layout from the extension: ".csv" is csv, everything else binary.
Layout layout_for(const std::filesystem::path& path);

/// Loads and validates one file, remapping its labels to {0..c-1} in
/// ascending order of the original values.
Dataset load_dataset(const std::filesystem::path& path, Layout layout);
Dataset load_dataset(const std::filesystem::path& path);

struct DatasetPair {
  Dataset train;
  Dataset test;
};

/// Loads a train/test pair. Test labels are remapped with the train mapping;
/// a test label unseen in training is an error.
DatasetPair load_pair(const std::filesystem::path& train_path, const std::filesystem::path& test_path);

/// Resolves `<stem>_TRAIN.tsd` / `<stem>_TEST.tsd` (or `.csv`) and loads them.
DatasetPair load_pair(const std::filesystem::path& stem);

/// Writes the binary layout. Labels are written as their original values.
void save_dataset(const Dataset& d, const std::filesystem::path& path);

/// Per-sample fold index for stratified k-fold splitting.
struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> held_out(int fold) const;
  std::vector<std::size_t> training(int fold) const;
};

/// Shuffles each class with a seeded RNG and deals members round-robin. The
/// dealing offset carries over between classes so fold sizes stay balanced.
FoldAssignment stratified_kfold(const Labels& y, int k, std::uint64_t seed);

/// min(cap, n) distinct indices sampled uniformly without replacement,
/// returned in ascending order.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, std::uint64_t seed);

}  // namespace hq
