#pragma once

#include <span>
#include <vector>

#include "sceneparse/seghier.hpp"
#include "sceneparse/volume.hpp"

namespace sceneparse {

struct BoundingBox {
  int top = 0;
  int left = 0;
  int bottom = 0;  // exclusive
  int right = 0;   // exclusive
  int height() const { return bottom - top; }
  int width() const { return right - left; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// G x G grid of pooled feature vectors for one tree node, stored (row, col, channel).
struct SegmentDescriptor {
  int grid = 0;
  int channels = 0;
  int node = -1;
  BoundingBox box;
  std::vector<double> cells;

  std::span<const double> cell(int r, int c) const {
    return std::span<const double>(cells).subspan(
        (static_cast<std::size_t>(r) * grid + c) * channels, static_cast<std::size_t>(channels));
  }
  friend bool operator==(const SegmentDescriptor&, const SegmentDescriptor&) = default;
};

BoundingBox component_box(const SegTree& tree, int node);

/// Masked elastic max pooling. The component's bounding box is split into G x G cells
/// (cell row r spans box rows floor(r*h/G) .. floor((r+1)*h/G)-1, likewise for columns);
/// each cell holds the channelwise max over component pixels inside it, or zeros.
SegmentDescriptor pool_component(const FeatureVolume& features, const SegTree& tree, int node, int grid);

/// Row-major (cell row, cell col, channel) flattening, length G*G*D.
std::vector<double> flatten_descriptor(const SegmentDescriptor& desc);
SegmentDescriptor unflatten_descriptor(std::span<const double> flat, int grid, int channels);

/// Pixel-major copy of a feature map, for pooling many components of one image.
class ComponentPooler {
 public:
  ComponentPooler(const FeatureVolume& features, const SegTree& tree);

  SegmentDescriptor pool(int node, int grid) const;
  /// Flattened descriptors of `nodes`, computed in parallel.
  std::vector<std::vector<double>> pool_flat(std::span<const int> nodes, int grid) const;

 private:
  const SegTree& tree_;
  int channels_;
  int width_;
  std::vector<double> pixel_major_;
};

}  // namespace sceneparse
