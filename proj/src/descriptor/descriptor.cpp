#include "sceneparse/descriptor.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace sceneparse {
namespace {

// cell_of[i] = grid cell containing box offset i along one axis.
std::vector<int> cell_lookup(int extent, int grid) {
  std::vector<int> cell_of(extent);
  for (int r = 0; r < grid; ++r) {
    const long lo = static_cast<long>(r) * extent / grid;
    const long hi = static_cast<long>(r + 1) * extent / grid;
    for (long i = lo; i < hi; ++i) cell_of[i] = r;
  }
  return cell_of;
}

void check_request(const SegTree& tree, int node, int grid) {
  if (node < 0 || node >= tree.size()) throw std::out_of_range("pool_component: node out of range");
  if (grid < 1) throw std::invalid_argument("pool_component: grid must be >= 1");
}

template <typename PixelFeatures>
SegmentDescriptor pool_impl(const SegTree& tree, int node, int grid, int channels, PixelFeatures&& pixel_value) {
  SegmentDescriptor d;
  d.grid = grid;
  d.channels = channels;
  d.node = node;
  d.box = component_box(tree, node);
  d.cells.assign(static_cast<std::size_t>(grid) * grid * channels, -std::numeric_limits<double>::infinity());
  std::vector<char> touched(static_cast<std::size_t>(grid) * grid, 0);

  const auto rows = cell_lookup(d.box.height(), grid);
  const auto cols = cell_lookup(d.box.width(), grid);
  const int w = tree.width();
  for (int p : tree.pixels(node)) {
    const int y = p / w;
    const int x = p % w;
    const int cell = rows[y - d.box.top] * grid + cols[x - d.box.left];
    touched[cell] = 1;
    double* dst = d.cells.data() + static_cast<std::size_t>(cell) * channels;
    pixel_value(p, dst);
  }
  for (int cell = 0; cell < grid * grid; ++cell) {
    if (!touched[cell]) {
      std::fill_n(d.cells.begin() + static_cast<std::ptrdiff_t>(cell) * channels, channels, 0.0);
    }
  }
  return d;
}

}  // namespace

BoundingBox component_box(const SegTree& tree, int node) {
  const int w = tree.width();
  BoundingBox box{tree.height(), w, 0, 0};
  for (int p : tree.pixels(node)) {
    const int y = p / w;
    const int x = p % w;
    box.top = std::min(box.top, y);
    box.left = std::min(box.left, x);
    box.bottom = std::max(box.bottom, y + 1);
    box.right = std::max(box.right, x + 1);
  }
  return box;
}

SegmentDescriptor pool_component(const FeatureVolume& features, const SegTree& tree, int node, int grid) {
  check_request(tree, node, grid);
  if (features.height() != tree.height() || features.width() != tree.width()) {
    throw std::invalid_argument("pool_component: feature map and tree sizes differ");
  }
  const int channels = features.channels();
  const std::size_t plane = features.plane_size();
  const auto data = features.data();
  return pool_impl(tree, node, grid, channels, [&](int p, double* dst) {
    for (int c = 0; c < channels; ++c) dst[c] = std::max(dst[c], data[c * plane + p]);
  });
}

std::vector<double> flatten_descriptor(const SegmentDescriptor& desc) { return desc.cells; }

SegmentDescriptor unflatten_descriptor(std::span<const double> flat, int grid, int channels) {
  if (flat.size() != static_cast<std::size_t>(grid) * grid * channels) {
    throw std::invalid_argument("unflatten_descriptor: length does not match grid and channels");
  }
  SegmentDescriptor d;
  d.grid = grid;
  d.channels = channels;
  d.cells.assign(flat.begin(), flat.end());
  return d;
}

ComponentPooler::ComponentPooler(const FeatureVolume& features, const SegTree& tree)
    : tree_(tree), channels_(features.channels()), width_(features.width()) {
  if (features.height() != tree.height() || features.width() != tree.width()) {
    throw std::invalid_argument("ComponentPooler: feature map and tree sizes differ");
  }
  const std::size_t plane = features.plane_size();
  pixel_major_.resize(features.size());
  const auto data = features.data();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < channels_; ++c) pixel_major_[p * channels_ + c] = data[c * plane + p];
  }
}

SegmentDescriptor ComponentPooler::pool(int node, int grid) const {
  check_request(tree_, node, grid);
  return pool_impl(tree_, node, grid, channels_, [&](int p, double* dst) {
    const double* src = pixel_major_.data() + static_cast<std::size_t>(p) * channels_;
    for (int c = 0; c < channels_; ++c) dst[c] = std::max(dst[c], src[c]);
  });
}

std::vector<std::vector<double>> ComponentPooler::pool_flat(std::span<const int> nodes, int grid) const {
  for (int node : nodes) check_request(tree_, node, grid);
  std::vector<std::vector<double>> out(nodes.size());
  const auto n = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = pool(nodes[i], grid).cells;
  return out;
}

}  // namespace sceneparse
