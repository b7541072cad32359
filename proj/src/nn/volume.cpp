#include "sceneparse/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sceneparse {

FeatureVolume::FeatureVolume(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) {
    throw std::invalid_argument("FeatureVolume: negative dimension");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

FeatureVolume::FeatureVolume(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (channels < 0 || height < 0 || width < 0) {
    throw std::invalid_argument("FeatureVolume: negative dimension");
  }
  if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
    throw std::invalid_argument("FeatureVolume: data length does not match dimensions");
  }
}

bool FeatureVolume::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const FeatureVolume& a, const FeatureVolume& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double worst = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) worst = std::max(worst, std::abs(da[i] - db[i]));
  return worst;
}

}  // namespace sceneparse
