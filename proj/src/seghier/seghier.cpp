#include "sceneparse/seghier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sceneparse {
namespace {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  int unite(int a, int b) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
};

}  // namespace

PixelGraph build_pixel_graph(const FeatureVolume& image) {
  if (image.height() < 1 || image.width() < 1) throw std::invalid_argument("build_pixel_graph: empty image");
  PixelGraph g{image.width(), image.height(), {}};
  const int w = image.width();
  const int h = image.height();
  g.edges.reserve(static_cast<std::size_t>(2) * w * h);
  auto distance = [&](int y0, int x0, int y1, int x1) {
    double acc = 0.0;
    for (int c = 0; c < image.channels(); ++c) {
      const double d = image.at(c, y0, x0) - image.at(c, y1, x1);
      acc += d * d;
    }
    return std::sqrt(acc);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int p = y * w + x;
      if (x + 1 < w) g.edges.push_back({p, p + 1, distance(y, x, y, x + 1)});
      if (y + 1 < h) g.edges.push_back({p, p + w, distance(y, x, y + 1, x)});
    }
  }
  return g;
}

void SegTree::rebuild_extents() {
  const int n = size();
  for (int id = 0; id < n; ++id) {
    auto& node = nodes_[id];
    if (node.children.empty()) {
      node.area = 1;
      continue;
    }
    int area = 0;
    for (int c : node.children) area += nodes_[c].area;
    node.area = area;
  }
  order_.assign(leaf_count(), 0);
  nodes_[root()].begin = 0;
  nodes_[root()].end = nodes_[root()].area;
  for (int id = n - 1; id >= 0; --id) {
    auto& node = nodes_[id];
    int cursor = node.begin;
    for (int c : node.children) {
      nodes_[c].begin = cursor;
      nodes_[c].end = cursor + nodes_[c].area;
      cursor += nodes_[c].area;
    }
    if (node.children.empty()) order_[node.begin] = id;
  }
}

SegTree SegTree::from_parents(int width, int height, const std::vector<int>& parents,
                              const std::vector<double>& altitudes) {
  const int leaves = width * height;
  const int n = static_cast<int>(parents.size());
  if (width < 1 || height < 1 || n < leaves) throw std::invalid_argument("SegTree::from_parents: too few nodes");
  if (!altitudes.empty() && static_cast<int>(altitudes.size()) != n) {
    throw std::invalid_argument("SegTree::from_parents: altitude count mismatch");
  }
  SegTree t;
  t.width_ = width;
  t.height_ = height;
  t.nodes_.resize(n);
  for (int id = 0; id < n; ++id) {
    const int p = parents[id];
    if (id == n - 1) {
      if (p != -1) throw std::invalid_argument("SegTree::from_parents: last node must be the root");
    } else if (p <= id || p >= n) {
      throw std::invalid_argument("SegTree::from_parents: parent must have a larger index");
    } else if (p < leaves) {
      throw std::invalid_argument("SegTree::from_parents: a leaf cannot be a parent");
    }
    t.nodes_[id].parent = p;
    if (p >= 0) t.nodes_[p].children.push_back(id);
    if (!altitudes.empty()) t.nodes_[id].altitude = altitudes[id];
  }
  for (int id = leaves; id < n; ++id) {
    if (t.nodes_[id].children.empty()) throw std::invalid_argument("SegTree::from_parents: childless internal node");
  }
  t.rebuild_extents();
  return t;
}

std::vector<int> SegTree::candidates() const {
  if (size() == 1) return {0};
  std::vector<int> ids(size() - leaf_count());
  std::iota(ids.begin(), ids.end(), leaf_count());
  return ids;
}

std::string SegTree::check_invariants() const {
  std::ostringstream err;
  if (nodes_.empty()) return "empty tree";
  if (nodes_[root()].area != leaf_count()) {
    err << "root area " << nodes_[root()].area << " != " << leaf_count();
    return err.str();
  }
  if (nodes_[root()].parent != -1) return "root has a parent";
  for (int id = 0; id < size(); ++id) {
    const auto& node = nodes_[id];
    if (id != root() && (node.parent <= id || node.parent >= size())) {
      err << "node " << id << " has invalid parent " << node.parent;
      return err.str();
    }
    if (is_leaf(id)) {
      if (!node.children.empty() || node.area != 1 || order_[node.begin] != id) {
        err << "leaf " << id << " malformed";
        return err.str();
      }
      continue;
    }
    if (node.children.empty()) {
      err << "internal node " << id << " has no children";
      return err.str();
    }
    int area = 0;
    int cursor = node.begin;
    for (int c : node.children) {
      const auto& child = nodes_[c];
      if (child.parent != id) {
        err << "child " << c << " does not point back to " << id;
        return err.str();
      }
      if (child.altitude > node.altitude) {
        err << "altitude of " << c << " exceeds its parent " << id;
        return err.str();
      }
      if (child.begin != cursor) {
        err << "extent of " << c << " does not continue its siblings";
        return err.str();
      }
      cursor = child.end;
      area += child.area;
    }
    if (area != node.area || cursor != node.end || node.end - node.begin != node.area) {
      err << "node " << id << " area/extent mismatch";
      return err.str();
    }
  }
  return {};
}

void SegTree::dump(std::ostream& os) const {
  for (int id = 0; id < size(); ++id) {
    const auto& n = nodes_[id];
    os << id << ' ' << n.parent << ' ' << n.altitude << ' ' << n.area << '\n';
  }
}

SegTree build_merge_tree(const PixelGraph& graph) {
  const int n = graph.width * graph.height;
  if (n < 1) throw std::invalid_argument("build_merge_tree: empty graph");
  std::vector<int> order(graph.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double wa = graph.edges[a].weight;
    const double wb = graph.edges[b].weight;
    return wa < wb || (wa == wb && a < b);
  });

  SegTree t;
  t.width_ = graph.width;
  t.height_ = graph.height;
  t.nodes_.resize(n);
  t.nodes_.reserve(2 * static_cast<std::size_t>(n) - 1);
  UnionFind uf(n);
  std::vector<int> region_node(n);
  std::iota(region_node.begin(), region_node.end(), 0);

  for (int e : order) {
    const auto& edge = graph.edges[e];
    const int ra = uf.find(edge.a);
    const int rb = uf.find(edge.b);
    if (ra == rb) continue;
    const int id = t.size();
    SegNode node;
    node.children = {region_node[ra], region_node[rb]};
    node.altitude = edge.weight;
    t.nodes_[region_node[ra]].parent = id;
    t.nodes_[region_node[rb]].parent = id;
    t.nodes_.push_back(std::move(node));
    region_node[uf.unite(ra, rb)] = id;
    if (t.size() == 2 * n - 1) break;
  }
  if (t.size() != 2 * n - 1) throw std::invalid_argument("build_merge_tree: graph is not connected");
  t.rebuild_extents();
  return t;
}

double min_child_volume(const SegTree& tree, int node) {
  const auto& n = tree.node(node);
  if (n.children.empty()) return 0.0;
  int smallest = n.area;
  for (int c : n.children) smallest = std::min(smallest, tree.node(c).area);
  return smallest * n.altitude;
}

SegTree volume_filter(const SegTree& tree, const std::function<double(const SegTree&, int)>& attribute) {
  const int n = tree.size();
  const int leaves = tree.leaf_count();
  std::vector<double> alt(n, 0.0);
  for (int id = leaves; id < n; ++id) {
    alt[id] = attribute(tree, id);
    for (int c : tree.nodes_[id].children) alt[id] = std::max(alt[id], alt[c]);
  }

  std::vector<int> internal(n - leaves);
  std::iota(internal.begin(), internal.end(), leaves);
  std::stable_sort(internal.begin(), internal.end(), [&](int a, int b) { return alt[a] < alt[b]; });
  std::vector<int> remap(n);
  std::iota(remap.begin(), remap.begin() + leaves, 0);
  for (int i = 0; i < static_cast<int>(internal.size()); ++i) remap[internal[i]] = leaves + i;

  SegTree out;
  out.width_ = tree.width_;
  out.height_ = tree.height_;
  out.nodes_.resize(n);
  for (int id = 0; id < n; ++id) {
    const auto& src = tree.nodes_[id];
    auto& dst = out.nodes_[remap[id]];
    dst = src;
    dst.altitude = alt[id];
    dst.parent = src.parent < 0 ? -1 : remap[src.parent];
    for (int& c : dst.children) c = remap[c];
  }
  out.rebuild_extents();
  return out;
}

SegTree remove_small(const SegTree& tree, int min_pixels) {
  const int n = tree.size();
  const int leaves = tree.leaf_count();
  std::vector<char> keep(n, 1);
  for (int id = leaves; id < n - 1; ++id) keep[id] = tree.nodes_[id].area >= min_pixels;

  // Nearest kept strict ancestor, resolved top-down.
  std::vector<int> anchor(n, -1);
  for (int id = n - 2; id >= 0; --id) {
    const int p = tree.nodes_[id].parent;
    anchor[id] = keep[p] ? p : anchor[p];
  }

  std::vector<int> remap(n, -1);
  int next = 0;
  for (int id = 0; id < n; ++id) {
    if (keep[id]) remap[id] = next++;
  }

  SegTree out;
  out.width_ = tree.width_;
  out.height_ = tree.height_;
  out.nodes_.resize(next);
  for (int id = 0; id < n; ++id) {
    if (!keep[id]) continue;
    auto& dst = out.nodes_[remap[id]];
    const auto& src = tree.nodes_[id];
    dst.altitude = src.altitude;
    dst.cost = src.cost;
    dst.distribution = src.distribution;
    dst.parent = id == n - 1 ? -1 : remap[anchor[id]];
    dst.begin = src.begin;
    if (dst.parent >= 0) out.nodes_[dst.parent].children.push_back(remap[id]);
  }
  // Keep the original leaf order: siblings sorted by their old extent start.
  for (auto& node : out.nodes_) {
    std::sort(node.children.begin(), node.children.end(),
              [&](int a, int b) { return out.nodes_[a].begin < out.nodes_[b].begin; });
  }
  out.rebuild_extents();
  return out;
}

SegTree build_hierarchy(const FeatureVolume& image, int min_pixels) {
  return remove_small(volume_filter(build_merge_tree(build_pixel_graph(image))), min_pixels);
}

}  // namespace sceneparse
