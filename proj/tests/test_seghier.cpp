#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "sceneparse/reference.hpp"
#include "sceneparse/seghier.hpp"
#include "test_support.hpp"

using namespace sceneparse;
using testing::random_volume;

namespace {

std::vector<int> sorted_pixels(const SegTree& tree, int node) {
  std::vector<int> p(tree.pixels(node).begin(), tree.pixels(node).end());
  std::sort(p.begin(), p.end());
  return p;
}

int node_with_pixels(const SegTree& tree, const std::vector<int>& pixels) {
  for (int id = tree.leaf_count(); id < tree.size(); ++id) {
    if (sorted_pixels(tree, id) == pixels) return id;
  }
  return -1;
}

// A blocky image so that the hierarchy has sizeable regions.
FeatureVolume blocky_image(int h, int w, std::uint64_t seed) {
  const auto base = random_volume(3, (h + 3) / 4, (w + 3) / 4, seed, 0.0, 1.0);
  const auto noise = random_volume(3, h, w, seed + 1, -0.02, 0.02);
  FeatureVolume out(3, h, w);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(c, y, x) = base.at(c, y / 4, x / 4) + noise.at(c, y, x);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("pixel graph examples") {
  const auto uniform = build_pixel_graph(FeatureVolume(3, 4, 5, 0.3));
  for (const auto& e : uniform.edges) CHECK(e.weight == 0.0);

  FeatureVolume pair(3, 1, 2);
  pair.at(0, 0, 1) = 3.0;
  pair.at(1, 0, 1) = 4.0;
  const auto g = build_pixel_graph(pair);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].a == 0);
  CHECK(g.edges[0].b == 1);
  CHECK(g.edges[0].weight == 5.0);

  CHECK(build_pixel_graph(random_volume(3, 3, 3, 1)).edges.size() == 12);
  const auto g75 = build_pixel_graph(random_volume(3, 5, 7, 2));
  CHECK(g75.edges.size() == 2u * 7 * 5 - 7 - 5);
  for (const auto& e : g75.edges) CHECK(e.weight >= 0.0);
}

TEST_CASE("merge tree has 2WH-1 nodes and a 1x1 image is a single leaf") {
  const auto tree = build_merge_tree(build_pixel_graph(random_volume(3, 6, 9, 3)));
  CHECK(tree.size() == 2 * 54 - 1);
  CHECK(tree.node(tree.root()).area == 54);
  CHECK(tree.check_invariants().empty());

  const auto single = build_merge_tree(build_pixel_graph(random_volume(3, 1, 1, 4)));
  CHECK(single.size() == 1);
  CHECK(single.root() == 0);
  CHECK(single.candidates() == std::vector<int>{0});
}

TEST_CASE("2x2 merge order follows an exhaustive minimum spanning tree") {
  // Four edges forming one cycle; every 3-edge subset is a spanning tree.
  FeatureVolume image(1, 2, 2, std::vector<double>{0.0, 1.0, 3.5, 6.0});
  const auto graph = build_pixel_graph(image);
  REQUIRE(graph.edges.size() == 4);
  double best = 1e300;
  int dropped = -1;
  for (int skip = 0; skip < 4; ++skip) {
    double total = 0.0;
    for (int e = 0; e < 4; ++e) {
      if (e != skip) total += graph.edges[e].weight;
    }
    if (total < best) {
      best = total;
      dropped = skip;
    }
  }
  std::vector<GraphEdge> mst;
  for (int e = 0; e < 4; ++e) {
    if (e != dropped) mst.push_back(graph.edges[e]);
  }
  std::sort(mst.begin(), mst.end(), [](const GraphEdge& a, const GraphEdge& b) { return a.weight < b.weight; });

  const auto tree = build_merge_tree(graph);
  REQUIRE(tree.size() == 7);
  std::set<int> merged;
  for (int k = 0; k < 3; ++k) {
    const auto& node = tree.node(4 + k);
    CHECK(node.altitude == mst[k].weight);
    merged.insert(mst[k].a);
    merged.insert(mst[k].b);
    const auto px = sorted_pixels(tree, 4 + k);
    CHECK(std::binary_search(px.begin(), px.end(), mst[k].a));
    CHECK(std::binary_search(px.begin(), px.end(), mst[k].b));
  }
}

TEST_CASE("uniform image merges at altitude zero deterministically") {
  const auto image = FeatureVolume(3, 5, 4, 0.5);
  const auto a = build_merge_tree(build_pixel_graph(image));
  const auto b = build_merge_tree(build_pixel_graph(image));
  for (int id = a.leaf_count(); id < a.size(); ++id) CHECK(a.node(id).altitude == 0.0);
  CHECK(a == b);
}

TEST_CASE("merge altitudes equal the Prim minimum spanning tree weights") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int h = std::uniform_int_distribution<int>(1, 9)(rng);
    const int w = std::uniform_int_distribution<int>(1, 9)(rng);
    const auto image = random_volume(3, h, w, 100 + trial);
    const auto tree = build_merge_tree(build_pixel_graph(image));
    CHECK(reference::merge_weights(tree) == reference::prim_mst_weights(image));
  }
}

TEST_CASE("volume filter with equal altitudes orders merges by the smaller child area") {
  // 6x1 image: 6={0,1}, 7={2,3}, 8={6,7}, 9={4,5}, 10={8,9}; all altitudes 1.
  const std::vector<int> parents = {6, 6, 7, 7, 9, 9, 8, 8, 10, 10, -1};
  const std::vector<double> altitudes(11, 1.0);
  const auto tree = SegTree::from_parents(6, 1, parents, altitudes);
  const auto filtered = volume_filter(tree);
  REQUIRE(filtered.check_invariants().empty());
  for (int id = 6; id < 11; ++id) {
    const int old = node_with_pixels(tree, sorted_pixels(filtered, id));
    REQUIRE(old >= 0);
    CHECK(filtered.node(id).altitude == min_child_volume(tree, old));
  }
  CHECK(sorted_pixels(filtered, 8) == std::vector<int>{4, 5});
  CHECK(sorted_pixels(filtered, 9) == std::vector<int>{0, 1, 2, 3});
  CHECK(filtered.node(9).altitude == 2.0);
  CHECK(filtered.node(10).altitude == 2.0);
}

TEST_CASE("volume filter lifts a parent whose volume is below a child's") {
  // 8={0..3} has volume 2*2*2 = 8 but its parent 9 only min(4,1)*3 = 3.
  const std::vector<int> parents = {6, 6, 7, 7, 9, 10, 8, 8, 9, 10, -1};
  std::vector<double> altitudes(11, 0.0);
  altitudes[6] = 1.0;
  altitudes[7] = 1.0;
  altitudes[8] = 2.0;
  altitudes[9] = 3.0;
  altitudes[10] = 3.0;
  const auto tree = SegTree::from_parents(6, 1, parents, altitudes);
  CHECK(min_child_volume(tree, 8) == 4.0);
  CHECK(min_child_volume(tree, 9) == 3.0);
  const auto filtered = volume_filter(tree);
  CHECK(filtered.check_invariants().empty());
  CHECK(filtered.node(node_with_pixels(filtered, {0, 1, 2, 3})).altitude == 4.0);
  CHECK(filtered.node(node_with_pixels(filtered, {0, 1, 2, 3, 4})).altitude == 4.0);
  CHECK(filtered.node(filtered.root()).altitude == 4.0);
}

TEST_CASE("volume filter of a single merge is one times the edge weight") {
  FeatureVolume pair(3, 1, 2);
  pair.at(0, 0, 1) = 3.0;
  pair.at(1, 0, 1) = 4.0;
  const auto filtered = volume_filter(build_merge_tree(build_pixel_graph(pair)));
  REQUIRE(filtered.size() == 3);
  CHECK(filtered.node(2).altitude == 5.0);
}

TEST_CASE("volume filtered trees are monotone and keep their partitions") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto image = blocky_image(12, 15, 200 + seed);
    const auto tree = build_merge_tree(build_pixel_graph(image));
    const auto filtered = volume_filter(tree);
    CHECK(filtered.check_invariants().empty());
    for (int id = 0; id < filtered.size(); ++id) {
      const int p = filtered.node(id).parent;
      if (p >= 0) CHECK(filtered.node(p).altitude >= filtered.node(id).altitude);
    }
    CHECK(filtered.node(filtered.root()).area == 180);
  }
}

TEST_CASE("remove_small examples") {
  const auto image = blocky_image(16, 16, 300);
  const auto tree = volume_filter(build_merge_tree(build_pixel_graph(image)));
  CHECK(remove_small(tree, 1) == tree);

  const auto root_only = remove_small(tree, 256);
  CHECK(root_only.size() == 257);
  CHECK(root_only.candidates() == std::vector<int>{256});
  for (int p = 0; p < 256; ++p) CHECK(root_only.node(p).parent == 256);

  const auto pruned = remove_small(tree, 10);
  CHECK(pruned.check_invariants().empty());
  for (int id : pruned.candidates()) {
    if (id != pruned.root()) CHECK(pruned.node(id).area >= 10);
  }
  for (int id = pruned.leaf_count(); id < pruned.size(); ++id) {
    CHECK(pruned.node(id).children.size() >= 2);
    CHECK(node_with_pixels(tree, sorted_pixels(pruned, id)) >= 0);
  }
  CHECK(remove_small(tree, 1000).candidates() == std::vector<int>{256});
}

TEST_CASE("hierarchy construction is deterministic and dumps one line per node") {
  const auto image = blocky_image(20, 24, 400);
  const auto a = build_hierarchy(image, 10);
  const auto b = build_hierarchy(image, 10);
  CHECK(a == b);
  std::ostringstream os;
  a.dump(os);
  const auto text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == a.size());
  std::istringstream first(text);
  int id = -1;
  int parent = -2;
  double altitude = -1.0;
  int area = 0;
  first >> id >> parent >> altitude >> area;
  CHECK(id == 0);
  CHECK(parent == a.node(0).parent);
  CHECK(area == 1);
}
