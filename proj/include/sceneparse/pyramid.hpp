#pragma once

#include <vector>

#include "sceneparse/volume.hpp"

namespace sceneparse {

inline constexpr int kDefaultNormWindow = 15;
inline constexpr double kNormStdFloor = 1e-2;

/// Locally normalized Laplacian pyramid; level 0 has the input size and each
/// following level halves both dimensions (ceil).
struct Pyramid {
  std::vector<FeatureVolume> levels;
  int num_levels() const { return static_cast<int>(levels.size()); }
};

/// Separable [1 4 6 4 1]/16 blur with edge replication.
FeatureVolume binomial_blur(const FeatureVolume& image);
/// Blur then keep every second row and column.
FeatureVolume downsample2(const FeatureVolume& image);
/// Nearest-neighbour expansion to (height, width) followed by a binomial blur.
FeatureVolume upsample2(const FeatureVolume& image, int height, int width);

std::vector<FeatureVolume> gaussian_pyramid(const FeatureVolume& image, int n_levels);
/// Band-pass levels before normalization: L_s = G_s - upsample2(G_{s+1}), last level G_n.
std::vector<FeatureVolume> laplacian_bands(const FeatureVolume& image, int n_levels);
/// Inverse of laplacian_bands.
FeatureVolume collapse_bands(const std::vector<FeatureVolume>& bands);

/// Subtracts the window mean and divides by max(window std, kNormStdFloor). Statistics
/// are taken jointly over all channels, borders use edge replication.
FeatureVolume local_normalize(const FeatureVolume& image, int window = kDefaultNormWindow);

Pyramid laplacian_pyramid(const FeatureVolume& image, int n_levels, int window = kDefaultNormWindow);

/// ceil(extent / 2^level)
inline int level_extent(int extent, int level) {
  for (int i = 0; i < level; ++i) extent = (extent + 1) / 2;
  return extent;
}

}  // namespace sceneparse
