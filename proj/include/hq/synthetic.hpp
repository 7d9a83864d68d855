#pragma once

#include "hq/data.hpp"

#include <cstdint>
#include <string>

// Synthetic train/test pairs with planted structure, used by the tests, the
// acceptance suite and `hqbench make-synthetic`.

namespace hq::synthetic {

enum class Kind {
  /// Four classes. 0 and 1 differ only in the noise distribution (uniform vs
  /// Laplace, equal variance); 2 and 3 carry a short motif or its time
  /// reversal over noise of either kind. Quantiles see the first pair, the
  /// competing kernels the second.
  planted_complementarity,
  /// Two classes: label = (motif reversed) XOR (Laplace noise). Each base on
  /// its own sees half of the signal.
  cross_interaction,
  /// Two classes separated by a constant level offset.
  level_shift,
  /// Unstructured Gaussian series with random labels.
  random_labels,
};

std::string to_string(Kind k);
Kind parse_kind(const std::string& name);

struct Spec {
  Kind kind = Kind::planted_complementarity;
  std::size_t n_train = 600;
  std::size_t n_test = 400;
  std::size_t length = 64;
  std::size_t channels = 1;
  std::size_t classes = 2;  // only used by random_labels
  std::uint64_t seed = 42;
};

DatasetPair make(const Spec& spec);

}  // namespace hq::synthetic
