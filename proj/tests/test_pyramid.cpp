#include <doctest.h>

#include <cmath>

#include "sceneparse/pyramid.hpp"
#include "test_support.hpp"

using namespace sceneparse;
using testing::random_volume;

namespace {

// Windowed mean and population std over all channels, for windows that fit inside the image.
struct WindowStats {
  double mean;
  double stddev;
};

WindowStats window_stats(const FeatureVolume& v, int cy, int cx, int r) {
  double s = 0.0;
  double n = 0.0;
  for (int c = 0; c < v.channels(); ++c) {
    for (int y = cy - r; y <= cy + r; ++y) {
      for (int x = cx - r; x <= cx + r; ++x) {
        s += v.at(c, y, x);
        n += 1.0;
      }
    }
  }
  const double mean = s / n;
  double ss = 0.0;
  for (int c = 0; c < v.channels(); ++c) {
    for (int y = cy - r; y <= cy + r; ++y) {
      for (int x = cx - r; x <= cx + r; ++x) ss += (v.at(c, y, x) - mean) * (v.at(c, y, x) - mean);
    }
  }
  return {mean, std::sqrt(ss / n)};
}

// Period equal to the window, so every window sees the same statistics.
FeatureVolume tiled_pattern(int channels, int h, int w, int period, std::uint64_t seed) {
  const auto tile = random_volume(channels, period, period, seed, 0.0, 1.0);
  FeatureVolume out(channels, h, w);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(c, y, x) = tile.at(c, y % period, x % period);
    }
  }
  return out;
}

double max_abs(const FeatureVolume& v) {
  double m = 0.0;
  for (double x : v.data()) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("pyramid levels of a 320x240 image are 320x240, 160x120, 80x60") {
  const auto pyr = laplacian_pyramid(random_volume(3, 240, 320, 1, 0.0, 1.0), 3);
  REQUIRE(pyr.num_levels() == 3);
  CHECK(pyr.levels[0].height() == 240);
  CHECK(pyr.levels[0].width() == 320);
  CHECK(pyr.levels[1].height() == 120);
  CHECK(pyr.levels[1].width() == 160);
  CHECK(pyr.levels[2].height() == 60);
  CHECK(pyr.levels[2].width() == 80);
  for (const auto& level : pyr.levels) {
    CHECK(level.channels() == 3);
    CHECK(level.all_finite());
  }
}

TEST_CASE("level sizes follow ceil halving on odd extents") {
  const auto pyr = laplacian_pyramid(random_volume(3, 37, 23, 2), 4, 3);
  REQUIRE(pyr.num_levels() == 4);
  for (int s = 0; s < 4; ++s) {
    CHECK(pyr.levels[s].height() == level_extent(37, s));
    CHECK(pyr.levels[s].width() == level_extent(23, s));
  }
  CHECK(level_extent(37, 1) == 19);
  CHECK(level_extent(37, 3) == 5);
  CHECK(level_extent(23, 2) == 6);
}

TEST_CASE("constant image gives all-zero normalized levels") {
  const auto pyr = laplacian_pyramid(FeatureVolume(3, 64, 48, 0.4), 3, 5);
  for (const auto& level : pyr.levels) CHECK(max_abs(level) < 1e-12);
}

TEST_CASE("a one-level pyramid is the normalized image") {
  const auto image = random_volume(3, 20, 24, 3, 0.0, 1.0);
  const auto pyr = laplacian_pyramid(image, 1, 7);
  REQUIRE(pyr.num_levels() == 1);
  CHECK(max_abs_diff(pyr.levels[0], local_normalize(image, 7)) == 0.0);
}

TEST_CASE("too many levels is rejected") {
  CHECK_THROWS_AS(laplacian_pyramid(random_volume(1, 4, 4, 4), 4), std::invalid_argument);
  CHECK_THROWS_AS(laplacian_pyramid(random_volume(1, 4, 4, 4), 0), std::invalid_argument);
}

TEST_CASE("band-pass levels collapse back to the image") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto image = random_volume(3, 33, 50, seed);
    const auto bands = laplacian_bands(image, 4);
    CHECK(max_abs_diff(collapse_bands(bands), image) < 1e-10);
  }
}

TEST_CASE("local_normalize of a constant image is zero") {
  CHECK(max_abs(local_normalize(FeatureVolume(3, 20, 20, 0.7), 15)) < 1e-12);
}

TEST_CASE("normalized output has zero mean and unit std over interior windows") {
  const int window = 5;
  const int r = window / 2;
  const auto image = tiled_pattern(3, 30, 25, window, 5);
  const auto out = local_normalize(image, window);
  // Windows whose pixels were all normalized without touching the border.
  for (int y = 2 * r; y < out.height() - 2 * r; ++y) {
    for (int x = 2 * r; x < out.width() - 2 * r; ++x) {
      const auto in_stats = window_stats(image, y, x, r);
      REQUIRE(in_stats.stddev > kNormStdFloor);
      const auto s = window_stats(out, y, x, r);
      CHECK(std::abs(s.mean) < 1e-10);
      CHECK(std::abs(s.stddev - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("local_normalize is invariant to affine intensity changes") {
  const auto image = random_volume(3, 24, 24, 6, 0.0, 1.0);
  FeatureVolume scaled = image;
  for (double& v : scaled.data()) v = 3.0 * v + 0.7;
  CHECK(max_abs_diff(local_normalize(image, 7), local_normalize(scaled, 7)) < 1e-8);
}

TEST_CASE("local_normalize rejects bad windows") {
  CHECK_THROWS_AS(local_normalize(random_volume(1, 10, 10, 7), 4), std::invalid_argument);
  CHECK_THROWS_AS(local_normalize(random_volume(1, 10, 10, 7), 11), std::invalid_argument);
}
