#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sceneparse {

/// Dense 3D array of activations stored row-major as (channel, row, col).
class FeatureVolume {
 public:
  FeatureVolume() = default;
  FeatureVolume(int channels, int height, int width, double fill = 0.0);
  FeatureVolume(int channels, int height, int width, std::vector<double> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }
  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<double> row(int c, int y) { return {data_.data() + index(c, y, 0), static_cast<std::size_t>(width_)}; }
  std::span<const double> row(int c, int y) const {
    return {data_.data() + index(c, y, 0), static_cast<std::size_t>(width_)};
  }

  bool same_shape(const FeatureVolume& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const;

  friend bool operator==(const FeatureVolume&, const FeatureVolume&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const FeatureVolume& a, const FeatureVolume& b);

}  // namespace sceneparse
