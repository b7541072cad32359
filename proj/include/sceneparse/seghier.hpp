#pragma once

// Segmentation hierarchy over the pixel grid. Leaves are pixels (node id =
// row-major pixel index), internal nodes are regions created by merging two or
// more children, and every node's pixels occupy a contiguous range of the
// tree's leaf ordering.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "sceneparse/distribution.hpp"
#include "sceneparse/volume.hpp"

namespace sceneparse {

struct GraphEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

/// 4-connected grid graph. Edges are listed pixel by pixel in row-major order,
/// each pixel contributing its right edge then its down edge.
struct PixelGraph {
  int width = 0;
  int height = 0;
  std::vector<GraphEdge> edges;
};

/// Edge weight = Euclidean distance between the two pixels' colour vectors.
PixelGraph build_pixel_graph(const FeatureVolume& image);

struct SegNode {
  int parent = -1;
  std::vector<int> children;
  double altitude = 0.0;
  int area = 1;
  int begin = 0;  // [begin, end) range into SegTree::leaf_order()
  int end = 1;
  std::optional<double> cost;
  std::optional<ClassDistribution> distribution;

  friend bool operator==(const SegNode&, const SegNode&) = default;
};

class SegTree {
 public:
  SegTree() = default;

  /// Builds a tree from parent links. Leaves are 0..width*height-1, every non-root
  /// node must have a parent with a larger index and the root is the last node.
  static SegTree from_parents(int width, int height, const std::vector<int>& parents,
                              const std::vector<double>& altitudes = {});

  int width() const { return width_; }
  int height() const { return height_; }
  int leaf_count() const { return width_ * height_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int root() const { return size() - 1; }
  bool is_leaf(int node) const { return node < leaf_count(); }

  const SegNode& node(int id) const { return nodes_.at(id); }
  SegNode& node(int id) { return nodes_.at(id); }
  std::span<const SegNode> nodes() const { return nodes_; }

  std::span<const int> leaf_order() const { return order_; }
  /// Pixels of `node` as row-major indices.
  std::span<const int> pixels(int node) const {
    const auto& n = nodes_.at(node);
    return std::span<const int>(order_).subspan(n.begin, n.end - n.begin);
  }

  /// Internal nodes, or the root alone for a single-pixel image.
  std::vector<int> candidates() const;

  /// Checks area additivity, altitude monotonicity and extent partitioning.
  /// Returns an empty string when valid, otherwise a description of the first violation.
  std::string check_invariants() const;

  /// One line per node: `id parent altitude area`, parent -1 for the root.
  void dump(std::ostream& os) const;

  friend bool operator==(const SegTree&, const SegTree&) = default;

 private:
  friend SegTree build_merge_tree(const PixelGraph& graph);
  friend SegTree volume_filter(const SegTree& tree, const std::function<double(const SegTree&, int)>& attribute);
  friend SegTree remove_small(const SegTree& tree, int min_pixels);

  void rebuild_extents();

  int width_ = 0;
  int height_ = 0;
  std::vector<SegNode> nodes_;
  std::vector<int> order_;
};

/// Kruskal over edges stable-sorted by (weight, edge index); each union creates a
/// node whose altitude is the merging edge's weight.
SegTree build_merge_tree(const PixelGraph& graph);

/// min(child areas) * altitude; zero for leaves.
double min_child_volume(const SegTree& tree, int node);

/// Replaces internal altitudes by `attribute`, makes them non-decreasing towards the
/// root and renumbers internal nodes by (altitude, previous id).
SegTree volume_filter(const SegTree& tree,
                      const std::function<double(const SegTree&, int)>& attribute = min_child_volume);

inline constexpr int kDefaultMinComponent = 100;

/// Removes internal nodes with area < min_pixels (the root always stays); their
/// children re-attach to the nearest surviving ancestor.
SegTree remove_small(const SegTree& tree, int min_pixels = kDefaultMinComponent);

/// Graph, merge tree, volume filtering and small-component removal in one call.
SegTree build_hierarchy(const FeatureVolume& image, int min_pixels = kDefaultMinComponent);

}  // namespace sceneparse
