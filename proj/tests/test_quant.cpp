#include "helpers.hpp"
#include "oracles.hpp"
#include "quant_oracle.hpp"

#include "hq/quant.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

using namespace hq;
using namespace hq::testing;

namespace {

std::vector<double> dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t f = 0; f < out.size(); ++f) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(f * t) / static_cast<double>(n));
    }
    out[f] = std::abs(acc);
  }
  return out;
}

}  // namespace

TEST_CASE("quantile_count") {
  for (std::size_t m = 1; m <= 1000; ++m) CHECK(quantile_count(m, 4) == 1 + (m - 1) / 4);
  CHECK(quantile_count(1, 4) == 1);
  CHECK(quantile_count(5, 4) == 2);
  CHECK_THROWS_AS(quantile_count(0, 4), ConfigError);
}

TEST_CASE("dyadic intervals of length 16, depth 2") {
  const IntervalSet got = dyadic_intervals(16, 2);
  const IntervalSet want = {{0, 16}, {0, 8}, {8, 16}, {4, 12}};
  CHECK(got == want);
}

TEST_CASE("dyadic intervals with a remainder") {
  // 23 at level 1: parts 12 + 11, shift ceil(23/4) = 6.
  const IntervalSet got = dyadic_intervals(23, 2);
  const IntervalSet want = {{0, 23}, {0, 12}, {12, 23}, {6, 18}};
  CHECK(got == want);
}

TEST_CASE("dyadic intervals match the enumeration oracle") {
  for (std::size_t n = 1; n <= 300; ++n) {
    for (int depth : {1, 2, 4, 6}) {
      const IntervalSet got = dyadic_intervals(n, depth);
      const auto want = testing::interval_oracle(n, depth);
      REQUIRE(got.size() == want.size());
      for (const auto& iv : got) {
        CHECK(want.count({iv.start, iv.end}) == 1);
        CHECK(iv.length() >= 1);
        CHECK(iv.end <= n);
      }
    }
  }
}

TEST_CASE("interval_quantiles against sort-and-interpolate") {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng.below(60);
    std::vector<double> v(m);
    for (double& x : v) x = rng.normal() * 3.0;
    const std::size_t k = quantile_count(m, 4);
    const auto q = interval_quantiles(v, k);
    REQUIRE(q.size() == k);
    if (k == 1) {
      CHECK(std::abs(q[0] - median_oracle(v)) < 1e-12);
      continue;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(m);
    for (std::size_t i = 0; i < k; ++i) {
      double want = sorted_quantile(v, static_cast<double>(i) / static_cast<double>(k - 1));
      if (i % 2 == 1) want -= mean;
      CHECK(std::abs(q[i] - want) < 1e-12);
    }
  }
}

TEST_CASE("interval_quantiles small cases") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(interval_quantiles(v, 1)[0] == 2.5);
  const auto q = interval_quantiles(v, 2);
  CHECK(q[0] == 1.0);
  CHECK(q[1] == 4.0 - 2.5);
  CHECK_THROWS_AS(interval_quantiles(std::vector<double>{}, 1), ConfigError);
}

TEST_CASE("representations") {
  std::vector<double> s(20);
  Rng rng(2);
  for (double& x : s) x = rng.normal();
  const auto r = representations(s, 5);
  REQUIRE(r.views[0]);
  CHECK(*r.views[0] == s);

  REQUIRE(r.views[1]);
  REQUIRE(r.views[1]->size() == 15);
  for (std::size_t t = 0; t < 15; ++t) {
    // Average of five consecutive first differences telescopes.
    CHECK((*r.views[1])[t] == doctest::Approx((s[t + 5] - s[t]) / 5.0).epsilon(1e-12));
  }

  REQUIRE(r.views[2]);
  REQUIRE(r.views[2]->size() == 18);
  for (std::size_t t = 0; t < 18; ++t) {
    CHECK((*r.views[2])[t] == doctest::Approx(s[t + 2] - 2 * s[t + 1] + s[t]).epsilon(1e-12));
  }

  REQUIRE(r.views[3]);
  const auto dft = dft_magnitude(s);
  REQUIRE(r.views[3]->size() == dft.size());
  for (std::size_t f = 0; f < dft.size(); ++f) CHECK(std::abs((*r.views[3])[f] - dft[f]) < 1e-9);
}

TEST_CASE("odd-length fft matches the naive DFT") {
  std::vector<double> s(23);
  for (std::size_t t = 0; t < s.size(); ++t) s[t] = std::sin(0.3 * static_cast<double>(t)) + 0.1 * t;
  const auto r = representations(s, 5);
  const auto dft = dft_magnitude(s);
  REQUIRE(r.views[3]->size() == 12);
  for (std::size_t f = 0; f < dft.size(); ++f) CHECK(std::abs((*r.views[3])[f] - dft[f]) < 1e-9);
}

TEST_CASE("short series drop representations with a note") {
  const std::vector<double> s{1, 2};
  const auto r = representations(s, 5);
  CHECK(r.views[0]);
  CHECK_FALSE(r.views[1]);
  CHECK_FALSE(r.views[2]);
  CHECK(r.views[3]);
  CHECK(r.notes.size() == 2);
}

TEST_CASE("column count matches the enumeration oracle") {
  const QuantConfig c;
  CHECK(quant_feature_count(16, 1, QuantConfig{2, 4, 5}) == testing::quant_column_oracle(16, 2, 4));
  CHECK(quant_feature_count(23, 1, c) == testing::quant_column_oracle(23, 6, 4));
  CHECK(quant_feature_count(128, 1, c) == testing::quant_column_oracle(128, 6, 4));
  CHECK(quant_feature_count(128, 3, c) == 3 * testing::quant_column_oracle(128, 6, 4));
  for (std::size_t n = 1; n < 200; n += 3) {
    const Dataset d = testing::random_dataset(2, 1, n, 2, n);
    CHECK(quant_transform(c, d).cols() == testing::quant_column_oracle(n, 6, 4));
  }
}

TEST_CASE("transform is deterministic and tagged") {
  const Dataset d = testing::random_dataset(9, 2, 50, 3, 4, Split::test);
  const QuantConfig c;
  const FeatureMatrix a = quant_transform(c, d);
  const FeatureMatrix b = quant_transform(c, d);
  CHECK(a.values == b.values);
  CHECK(a.from_test);
  REQUIRE(a.columns.size() == a.cols());
  CHECK(a.columns.front().source == FeatureSource::quant);
  CHECK(a.columns.front().tag[0] == 0);
  CHECK(a.columns.back().tag[0] == 1);
  CHECK(a.columns.back().tag[1] == static_cast<int>(Representation::fft_magnitude));
}

TEST_CASE("leading columns come from the whole original series") {
  const Dataset d = testing::random_dataset(3, 1, 40, 2, 8);
  const FeatureMatrix f = quant_transform(QuantConfig{}, d);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto s = d.series(i, 0);
    std::vector<double> v(s.begin(), s.end());
    // m = 40 gives 10 quantiles; position 0 is the minimum.
    CHECK(f.values(i, 0) == *std::min_element(v.begin(), v.end()));
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 40.0;
    CHECK(f.values(i, 1) == doctest::Approx(sorted_quantile(v, 1.0 / 9.0) - mean).epsilon(1e-12));
  }
}
