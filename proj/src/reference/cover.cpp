#include <stdexcept>

#include "sceneparse/reference.hpp"

namespace sceneparse::reference {
namespace {

int depth_of(const SegTree& tree, int node) {
  int d = 0;
  for (int v = tree.node(node).parent; v >= 0; v = tree.node(v).parent) ++d;
  return d;
}

}  // namespace

CoverOracle brute_force_cover(const SegTree& tree) {
  const int n = tree.leaf_count();
  std::vector<std::vector<char>> contains;
  std::vector<int> nodes;
  for (int id = 0; id < tree.size(); ++id) {
    if (tree.is_leaf(id) && id != tree.root()) continue;
    nodes.push_back(id);
    std::vector<char> mask(n, 0);
    for (int p : node_pixels(tree, id)) mask[p] = 1;
    contains.push_back(std::move(mask));
  }

  CoverOracle out;
  out.chosen.assign(n, -1);
  for (int p = 0; p < n; ++p) {
    int best = -1;
    double best_cost = 0.0;
    int best_depth = -1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!contains[i][p]) continue;
      const double c = tree.node(nodes[i]).cost.value();
      const int d = depth_of(tree, nodes[i]);
      if (best < 0 || c < best_cost || (c == best_cost && d > best_depth)) {
        best = nodes[i];
        best_cost = c;
        best_depth = d;
      }
    }
    if (best < 0) throw std::logic_error("brute_force_cover: pixel without a containing node");
    out.chosen[p] = best;
    out.total_cost += best_cost;
  }
  return out;
}

LabelMap relabel(const SegTree& tree, const std::vector<int>& chosen) {
  LabelMap out(tree.height(), tree.width());
  for (int p = 0; p < tree.leaf_count(); ++p) {
    const auto probs = tree.node(chosen[p]).distribution.value().probs();
    int best = 0;
    for (int c = 1; c < static_cast<int>(probs.size()); ++c) {
      if (probs[c] > probs[best]) best = c;
    }
    out[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace sceneparse::reference
