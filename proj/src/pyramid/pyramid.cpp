#include "sceneparse/pyramid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sceneparse {
namespace {

constexpr std::array<double, 5> kBinomial = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

FeatureVolume binomial_blur(const FeatureVolume& image) {
  const int h = image.height();
  const int w = image.width();
  FeatureVolume tmp(image.channels(), h, w);
  FeatureVolume out(image.channels(), h, w);
#pragma omp parallel for
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      const auto src = image.row(c, y);
      auto dst = tmp.row(c, y);
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int t = -2; t <= 2; ++t) acc += kBinomial[t + 2] * src[clamp_index(x + t, w)];
        dst[x] = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      auto dst = out.row(c, y);
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int t = -2; t <= 2; ++t) acc += kBinomial[t + 2] * tmp.at(c, clamp_index(y + t, h), x);
        dst[x] = acc;
      }
    }
  }
  return out;
}

FeatureVolume downsample2(const FeatureVolume& image) {
  const auto blurred = binomial_blur(image);
  const int h = (image.height() + 1) / 2;
  const int w = (image.width() + 1) / 2;
  FeatureVolume out(image.channels(), h, w);
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(c, y, x) = blurred.at(c, 2 * y, 2 * x);
    }
  }
  return out;
}

FeatureVolume upsample2(const FeatureVolume& image, int height, int width) {
  if (level_extent(height, 1) != image.height() || level_extent(width, 1) != image.width()) {
    throw std::invalid_argument("upsample2: target size is not twice the source size");
  }
  FeatureVolume expanded(image.channels(), height, width);
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) expanded.at(c, y, x) = image.at(c, y / 2, x / 2);
    }
  }
  return binomial_blur(expanded);
}

std::vector<FeatureVolume> gaussian_pyramid(const FeatureVolume& image, int n_levels) {
  if (n_levels < 1) throw std::invalid_argument("gaussian_pyramid: need at least one level");
  if (image.channels() < 1 || image.height() < 1 || image.width() < 1) {
    throw std::invalid_argument("gaussian_pyramid: empty image");
  }
  if (level_extent(image.height(), n_levels - 1) < 1 || level_extent(image.width(), n_levels - 1) < 1) {
    throw std::invalid_argument("gaussian_pyramid: too many levels");
  }
  std::vector<FeatureVolume> levels;
  levels.reserve(n_levels);
  levels.push_back(image);
  for (int s = 1; s < n_levels; ++s) {
    // A 1-pixel level cannot be halved further without repeating itself.
    if (levels.back().height() == 1 && levels.back().width() == 1) {
      throw std::invalid_argument("gaussian_pyramid: level " + std::to_string(s) + " would be below 1x1");
    }
    levels.push_back(downsample2(levels.back()));
  }
  return levels;
}

std::vector<FeatureVolume> laplacian_bands(const FeatureVolume& image, int n_levels) {
  auto gauss = gaussian_pyramid(image, n_levels);
  std::vector<FeatureVolume> bands(n_levels);
  for (int s = 0; s + 1 < n_levels; ++s) {
    const auto up = upsample2(gauss[s + 1], gauss[s].height(), gauss[s].width());
    FeatureVolume band = gauss[s];
    auto b = band.data();
    auto u = up.data();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= u[i];
    bands[s] = std::move(band);
  }
  bands[n_levels - 1] = std::move(gauss[n_levels - 1]);
  return bands;
}

FeatureVolume collapse_bands(const std::vector<FeatureVolume>& bands) {
  if (bands.empty()) throw std::invalid_argument("collapse_bands: no bands");
  FeatureVolume acc = bands.back();
  for (int s = static_cast<int>(bands.size()) - 2; s >= 0; --s) {
    auto up = upsample2(acc, bands[s].height(), bands[s].width());
    auto u = up.data();
    auto b = bands[s].data();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += b[i];
    acc = std::move(up);
  }
  return acc;
}

FeatureVolume local_normalize(const FeatureVolume& image, int window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("local_normalize: window must be odd");
  if (window > image.height() || window > image.width()) {
    throw std::invalid_argument("local_normalize: window " + std::to_string(window) + " larger than " +
                                std::to_string(image.height()) + "x" + std::to_string(image.width()) + " image");
  }
  const int h = image.height();
  const int w = image.width();
  const int r = window / 2;
  const int channels = image.channels();

  // Per-pixel channel sums, then separable window sums with replicated borders.
  std::vector<double> sum(static_cast<std::size_t>(h) * w, 0.0);
  std::vector<double> sum_sq(sum.size(), 0.0);
  for (int c = 0; c < channels; ++c) {
    const auto plane = image.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      sum[i] += plane[i];
      sum_sq[i] += plane[i] * plane[i];
    }
  }
  std::vector<double> row_sum(sum.size());
  std::vector<double> row_sum_sq(sum.size());
#pragma omp parallel for
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      double s2 = 0.0;
      for (int t = -r; t <= r; ++t) {
        const std::size_t i = static_cast<std::size_t>(y) * w + clamp_index(x + t, w);
        s += sum[i];
        s2 += sum_sq[i];
      }
      row_sum[static_cast<std::size_t>(y) * w + x] = s;
      row_sum_sq[static_cast<std::size_t>(y) * w + x] = s2;
    }
  }

  const double count = static_cast<double>(window) * window * channels;
  FeatureVolume out(channels, h, w);
#pragma omp parallel for
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      double s2 = 0.0;
      for (int t = -r; t <= r; ++t) {
        const std::size_t i = static_cast<std::size_t>(clamp_index(y + t, h)) * w + x;
        s += row_sum[i];
        s2 += row_sum_sq[i];
      }
      const double mean = s / count;
      const double var = std::max(0.0, s2 / count - mean * mean);
      const double scale = 1.0 / std::max(std::sqrt(var), kNormStdFloor);
      for (int c = 0; c < channels; ++c) out.at(c, y, x) = (image.at(c, y, x) - mean) * scale;
    }
  }
  return out;
}

Pyramid laplacian_pyramid(const FeatureVolume& image, int n_levels, int window) {
  auto bands = laplacian_bands(image, n_levels);
  Pyramid pyr;
  pyr.levels.reserve(bands.size());
  for (const auto& band : bands) pyr.levels.push_back(local_normalize(band, window));
  return pyr;
}

}  // namespace sceneparse
