#include <algorithm>
#include <cmath>
#include <limits>

#include "sceneparse/reference.hpp"

namespace sceneparse::reference {

std::vector<double> prim_mst_weights(const FeatureVolume& image) {
  const int h = image.height();
  const int w = image.width();
  const int n = h * w;
  const auto distance = [&](int a, int b) {
    double s = 0.0;
    for (int c = 0; c < image.channels(); ++c) {
      const double d = image.at(c, a / w, a % w) - image.at(c, b / w, b % w);
      s += d * d;
    }
    return std::sqrt(s);
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<char> in_tree(n, 0);
  std::vector<double> key(n, inf);
  std::vector<double> weights;
  for (int start = 0; start < n; ++start) {
    if (in_tree[start]) continue;
    key[start] = 0.0;
    bool first = true;
    while (true) {
      int u = -1;
      for (int v = 0; v < n; ++v) {
        if (!in_tree[v] && key[v] < inf && (u < 0 || key[v] < key[u])) u = v;
      }
      if (u < 0) break;
      in_tree[u] = 1;
      if (!first) weights.push_back(key[u]);
      first = false;
      const int y = u / w;
      const int x = u % w;
      const int neighbours[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
      for (const auto& nb : neighbours) {
        if (nb[0] < 0 || nb[0] >= h || nb[1] < 0 || nb[1] >= w) continue;
        const int v = nb[0] * w + nb[1];
        if (!in_tree[v]) key[v] = std::min(key[v], distance(u, v));
      }
    }
  }
  std::sort(weights.begin(), weights.end());
  return weights;
}

std::vector<double> merge_weights(const SegTree& tree) {
  std::vector<double> out;
  for (int id = tree.leaf_count(); id < tree.size(); ++id) out.push_back(tree.node(id).altitude);
  std::sort(out.begin(), out.end());
  return out;
}

SegTree random_tree(int width, int height, std::mt19937_64& rng) {
  const int leaves = width * height;
  std::vector<int> parents(leaves, -1);
  std::vector<double> altitudes(leaves, 0.0);
  std::vector<int> active(leaves);
  for (int i = 0; i < leaves; ++i) active[i] = i;
  double altitude = 0.0;
  while (active.size() > 1) {
    const int k = active.size() >= 3 && std::bernoulli_distribution(0.3)(rng) ? 3 : 2;
    const int id = static_cast<int>(parents.size());
    parents.push_back(-1);
    altitude += std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    altitudes.push_back(altitude);
    for (int j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
      const std::size_t at = pick(rng);
      parents[active[at]] = id;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(at));
    }
    active.push_back(id);
  }
  return SegTree::from_parents(width, height, parents, altitudes);
}

}  // namespace sceneparse::reference
