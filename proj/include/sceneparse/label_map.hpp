#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sceneparse/volume.hpp"

namespace sceneparse {

/// Per-pixel class indices; kVoid marks unlabeled pixels.
class LabelMap {
 public:
  static constexpr std::uint8_t kVoid = 255;

  LabelMap() = default;
  LabelMap(int height, int width, std::uint8_t fill = 0)
      : height_(height), width_(width), labels_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return labels_.size(); }

  std::uint8_t& at(int y, int x) { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& operator[](std::size_t i) { return labels_[i]; }
  std::uint8_t operator[](std::size_t i) const { return labels_[i]; }

  std::span<std::uint8_t> data() { return labels_; }
  std::span<const std::uint8_t> data() const { return labels_; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> labels_;
};

struct LabeledImage {
  std::string name;
  FeatureVolume image;  // 3 x H x W, values in [0, 1]
  LabelMap labels;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<LabeledImage> samples;
  std::string split;

  int n_classes() const { return static_cast<int>(class_names.size()); }
  /// Throws unless every pair has matching sizes and labels < n_classes or void.
  void validate() const;
};

}  // namespace sceneparse
