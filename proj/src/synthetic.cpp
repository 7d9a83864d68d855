#include "hq/synthetic.hpp"

#include "hq/random.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace hq::synthetic {

namespace {

// Time-asymmetric shape whose first differences {+1, +2, -1, -2} are
// symmetric, so reversing it leaves difference quantiles unchanged.
constexpr std::array<double, 5> kMotif = {0.0, 1.0, 3.0, 2.0, 0.0};
constexpr double kMotifAmplitude = 2.5;
constexpr double kLevelOffset = 1.5;

enum class Noise { gaussian, uniform, laplace };

double draw(Rng& rng, Noise noise) {
  switch (noise) {
    case Noise::gaussian: return rng.normal();
    case Noise::uniform: return rng.uniform(-std::numbers::sqrt3, std::numbers::sqrt3);
    case Noise::laplace: {
      const double b = 1.0 / std::numbers::sqrt2;
      double u = rng.uniform() - 0.5;
      while (std::abs(u) >= 0.5) u = rng.uniform() - 0.5;
      return -b * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
    }
  }
  return 0.0;
}

struct Recipe {
  Noise noise = Noise::gaussian;
  int motif = 0;  // 0 none, 1 forward, -1 reversed
  double offset = 0.0;
};

Recipe recipe_for(Kind kind, int label, Rng& rng) {
  Recipe r;
  switch (kind) {
    case Kind::planted_complementarity:
      if (label < 2) {
        r.noise = label == 0 ? Noise::uniform : Noise::laplace;
      } else {
        r.noise = rng.below(2) == 0 ? Noise::uniform : Noise::laplace;
        r.motif = label == 2 ? 1 : -1;
      }
      break;
    case Kind::cross_interaction: {
      const bool laplace = rng.below(2) == 1;
      const bool reversed = (label == 1) != laplace;
      r.noise = laplace ? Noise::laplace : Noise::uniform;
      r.motif = reversed ? -1 : 1;
      break;
    }
    case Kind::level_shift:
      r.offset = label == 0 ? 0.0 : kLevelOffset;
      break;
    case Kind::random_labels:
      break;
  }
  return r;
}

Dataset generate(const Spec& spec, std::size_t n, Split split, Rng& rng) {
  const std::size_t classes = spec.kind == Kind::planted_complementarity ? 4
                              : spec.kind == Kind::random_labels         ? spec.classes
                                                                         : 2;
  Dataset d;
  d.name = to_string(spec.kind);
  d.split = split;
  d.n_instances = n;
  d.n_channels = spec.channels;
  d.series_length = spec.length;
  d.x.resize(n * spec.channels * spec.length);
  d.y.resize(n);
  d.label_values.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) d.label_values[c] = static_cast<std::int64_t>(c);

  for (std::size_t i = 0; i < n; ++i) {
    const int label = spec.kind == Kind::random_labels ? static_cast<int>(rng.below(classes))
                                                       : static_cast<int>(i % classes);
    d.y[i] = label;
    for (std::size_t ch = 0; ch < spec.channels; ++ch) {
      const Recipe r = recipe_for(spec.kind, label, rng);
      float* s = d.x.data() + (i * spec.channels + ch) * spec.length;
      for (std::size_t t = 0; t < spec.length; ++t) s[t] = static_cast<float>(draw(rng, r.noise) + r.offset);
      if (r.motif != 0 && spec.length >= kMotif.size()) {
        const auto pos = static_cast<std::size_t>(rng.below(spec.length - kMotif.size() + 1));
        for (std::size_t j = 0; j < kMotif.size(); ++j) {
          const double v = r.motif > 0 ? kMotif[j] : kMotif[kMotif.size() - 1 - j];
          s[pos + j] += static_cast<float>(kMotifAmplitude * v);
        }
      }
    }
  }
  return d;
}

}  // namespace

std::string to_string(Kind k) {
  switch (k) {
    case Kind::planted_complementarity: return "planted_complementarity";
    case Kind::cross_interaction: return "cross_interaction";
    case Kind::level_shift: return "level_shift";
    case Kind::random_labels: return "random_labels";
  }
  return "unknown";
}

Kind parse_kind(const std::string& name) {
  for (Kind k : {Kind::planted_complementarity, Kind::cross_interaction, Kind::level_shift, Kind::random_labels}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown synthetic dataset kind '" + name + "'");
}

DatasetPair make(const Spec& spec) {
  if (spec.n_train < 2 || spec.n_test < 1 || spec.length < 1 || spec.channels < 1) {
    throw ConfigError("synthetic: sizes too small");
  }
  if (spec.kind == Kind::random_labels && spec.classes < 2) throw ConfigError("synthetic: need at least 2 classes");
  Rng rng(spec.seed);
  DatasetPair pair;
  pair.train = generate(spec, spec.n_train, Split::train, rng);
  pair.test = generate(spec, spec.n_test, Split::test, rng);
  return pair;
}

}  // namespace hq::synthetic
