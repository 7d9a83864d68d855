#include "helpers.hpp"
#include "oracles.hpp"

#include "hq/hydra.hpp"
#include "hq/run_control.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace hq;
using namespace hq::testing;

namespace {

std::vector<int> dilation_oracle(std::size_t length, int kernel_length) {
  std::vector<int> out;
  for (std::size_t d = 1; d * static_cast<std::size_t>(kernel_length - 1) <= length - 1; d *= 2) {
    out.push_back(static_cast<int>(d));
  }
  return out;
}

void check_close(double got, double want, double rel) {
  CHECK(std::abs(got - want) <= rel * std::max(1.0, std::abs(want)));
}

}  // namespace

TEST_CASE("dilation schedule") {
  CHECK(compute_dilations(128, 9) == std::vector<int>{1, 2, 4, 8});
  CHECK(compute_dilations(600, 9) == std::vector<int>{1, 2, 4, 8, 16, 32, 64});
  CHECK(compute_dilations(9, 9) == std::vector<int>{1});
  for (std::size_t len = 9; len < 3000; len += 7) {
    CHECK(compute_dilations(len, 9) == dilation_oracle(len, 9));
    CHECK(compute_dilations(len, 5) == dilation_oracle(len, 5));
  }
}

TEST_CASE("config validation") {
  HydraConfig c;
  c.kernels_per_group = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.kernel_length = 8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("weights are centred per kernel and channel") {
  const auto t = HydraTransform::initialize(HydraConfig{}, 2, 128);
  CHECK(t.channels_per_group() == 2);
  double total_sq = 0.0;
  for (std::size_t di = 0; di < t.dilations().size(); ++di) {
    for (std::size_t g = 0; g < 64; ++g) {
      for (std::size_t k = 0; k < 8; ++k) {
        for (std::size_t c = 0; c < 2; ++c) {
          double sum = 0.0;
          for (std::size_t j = 0; j < 9; ++j) {
            sum += t.weight(di, g, k, c, j);
            total_sq += t.weight(di, g, k, c, j) * t.weight(di, g, k, c, j);
          }
          CHECK(std::abs(sum) < 1e-12);
        }
      }
    }
  }
  // Centred N(0,1) taps have variance 8/9.
  const double n = 4.0 * 64 * 8 * 2 * 9;
  CHECK(total_sq / n == doctest::Approx(8.0 / 9.0).epsilon(0.03));
}

TEST_CASE("channel subsets") {
  const auto t = HydraTransform::initialize(HydraConfig{}, 5, 64);
  CHECK(t.channels_per_group() == 3);
  for (int g = 0; g < 64; ++g) {
    std::vector<int> sel(t.channel_selection().begin() + g * 3, t.channel_selection().begin() + g * 3 + 3);
    std::sort(sel.begin(), sel.end());
    CHECK(std::adjacent_find(sel.begin(), sel.end()) == sel.end());
    CHECK(sel.front() >= 0);
    CHECK(sel.back() < 5);
  }
}

TEST_CASE("kernels depend only on seed and shape") {
  HydraConfig c;
  const auto a = HydraTransform::initialize(c, 1, 100);
  const auto b = HydraTransform::initialize(c, 1, 100);
  CHECK(a.weights() == b.weights());
  c.seed = 43;
  CHECK(HydraTransform::initialize(c, 1, 100).weights() != a.weights());
}

TEST_CASE("hard counts per group and dilation sum to the series length") {
  const Dataset d = testing::random_dataset(20, 1, 128, 2, 11);
  const auto t = HydraTransform::initialize(HydraConfig{}, 1, 128);
  const FeatureMatrix raw = t.raw_features(d);
  CHECK(raw.cols() == 4 * 64 * 8 * 2);
  for (Eigen::Index i = 0; i < raw.values.rows(); ++i) {
    for (std::size_t block = 0; block < 4 * 64; ++block) {
      double sum = 0.0;
      for (std::size_t k = 0; k < 8; ++k) sum += raw.values(i, static_cast<Eigen::Index>(block * 16 + k * 2));
      CHECK(sum == 128.0);
    }
  }
}

TEST_CASE("brute-force oracle on a one-group, two-kernel toy") {
  HydraConfig c;
  c.groups = 1;
  c.kernels_per_group = 2;
  c.seed = 5;
  for (std::size_t channels : {1, 2, 4}) {
    const Dataset d = testing::random_dataset(6, channels, 50, 2, 100 + channels);
    const auto t = HydraTransform::initialize(c, channels, 50);
    const FeatureMatrix raw = t.raw_features(d);
    for (std::size_t i = 0; i < d.n_instances; ++i) {
      const auto want = hydra_brute_force(t, d, i);
      REQUIRE(want.size() == raw.cols());
      for (std::size_t j = 0; j < want.size(); ++j) check_close(raw.values(i, j), want[j], 1e-5);
    }
  }
}

TEST_CASE("hand-set kernels") {
  // Kernel 0 sees the series, kernel 1 is zero: kernel 0 wins every point
  // except where its response is exactly zero, which ties and goes to 0 too.
  HydraConfig c;
  c.groups = 1;
  c.kernels_per_group = 2;
  c.kernel_length = 3;
  const std::size_t L = 5;
  const auto dils = compute_dilations(L, 3);
  REQUIRE(dils == std::vector<int>{1, 2});
  std::vector<double> w(dils.size() * 2 * 3, 0.0);
  w[1] = 1.0;  // dilation 0, kernel 0: identity tap
  w[6 + 1] = 1.0;
  auto t = HydraTransform::from_weights(c, 1, L, w, {0});
  Dataset d = testing::random_dataset(2, 1, L, 2, 1);
  d.x = {1, -2, 3, -4, 5, 0, 0, 0, 0, 0};
  const FeatureMatrix raw = t.raw_features(d);
  CHECK(raw.values(0, 0) == 5.0);
  CHECK(raw.values(0, 1) == 15.0);
  CHECK(raw.values(0, 2) == 0.0);
  CHECK(raw.values(1, 0) == 5.0);
  CHECK(raw.values(1, 1) == 0.0);
  CHECK_THROWS_AS(HydraTransform::from_weights(c, 1, L, std::vector<double>(3), {0}), ConfigError);
  CHECK_THROWS_AS(HydraTransform::from_weights(c, 1, L, w, {1}), ConfigError);
}

TEST_CASE("feature column order") {
  const auto t = HydraTransform::initialize(HydraConfig{}, 1, 64);
  const Dataset d = testing::random_dataset(2, 1, 64, 2, 1);
  const FeatureMatrix raw = t.raw_features(d);
  const std::size_t groups = 64, kernels = 8;
  for (std::size_t di = 0; di < t.dilations().size(); ++di) {
    for (std::size_t g = 0; g < groups; g += 17) {
      for (std::size_t k = 0; k < kernels; ++k) {
        const std::size_t col = ((di * groups + g) * kernels + k) * 2;
        const auto& info = raw.columns[col + 1];
        CHECK(info.source == FeatureSource::hydra);
        CHECK(info.tag[0] == static_cast<int>(di));
        CHECK(info.tag[1] == static_cast<int>(g));
        CHECK(info.tag[2] == static_cast<int>(k));
        CHECK(info.tag[3] == 1);
      }
    }
  }
}

TEST_CASE("normalization uses training statistics") {
  const Dataset train = testing::random_dataset(30, 1, 64, 2, 1);
  const Dataset test = testing::random_dataset(10, 1, 64, 2, 2, Split::test);
  const auto t = HydraTransform::fit(HydraConfig{}, train);
  const FeatureMatrix f = t.transform(train);
  const Vector mean = f.values.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-9);
  const FeatureMatrix ft = t.transform(test);
  CHECK(ft.from_test);
  const FeatureMatrix raw = t.raw_features(test);
  const Eigen::Index j = 3;
  CHECK(ft.values(0, j) == doctest::Approx((raw.values(0, j) - t.feature_mean()(j)) / t.feature_scale()(j)));
}

TEST_CASE("transform before normalization is an error") {
  const auto t = HydraTransform::initialize(HydraConfig{}, 1, 32);
  CHECK_THROWS(t.transform(testing::random_dataset(3, 1, 32, 2, 1)));
}

TEST_CASE("dimension mismatch") {
  const auto t = HydraTransform::fit(HydraConfig{}, testing::random_dataset(4, 1, 32, 2, 1));
  CHECK_THROWS_AS(t.transform(testing::random_dataset(3, 1, 33, 2, 1)), DataError);
}

TEST_CASE("serialization round trip reproduces features") {
  const Dataset train = testing::random_dataset(12, 2, 40, 3, 1);
  const Dataset test = testing::random_dataset(5, 2, 40, 3, 2, Split::test);
  const auto t = HydraTransform::fit(HydraConfig{}, train);
  std::stringstream blob;
  t.save(blob);
  const auto back = HydraTransform::load(blob);
  CHECK(back.transform(test).values == t.transform(test).values);
  std::stringstream junk("garbage");
  CHECK_THROWS_AS(HydraTransform::load(junk), DataError);
}

TEST_CASE("normalization refuses test-derived counts under the tripwire") {
  auto t = HydraTransform::initialize(HydraConfig{}, 1, 32);
  const FeatureMatrix raw = t.raw_features(testing::random_dataset(5, 1, 32, 2, 1, Split::test));
  TaintGuard guard;
  CHECK_THROWS_AS(t.fit_normalization(raw), TaintError);
}
