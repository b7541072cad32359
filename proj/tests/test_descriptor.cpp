#include <doctest.h>

#include <algorithm>

#include "sceneparse/descriptor.hpp"
#include "sceneparse/msnet.hpp"
#include "test_support.hpp"

using namespace sceneparse;
using testing::random_volume;

namespace {

// Tree whose node leaf_count() holds exactly the masked pixels and whose root holds everything.
SegTree tree_for_mask(int w, int h, const std::vector<char>& mask) {
  const int n = w * h;
  const bool whole = std::all_of(mask.begin(), mask.end(), [](char m) { return m != 0; });
  std::vector<int> parents(n + (whole ? 1 : 2), -1);
  for (int p = 0; p < n; ++p) parents[p] = mask[p] ? n : n + 1;
  if (!whole) parents[n] = n + 1;
  return SegTree::from_parents(w, h, parents);
}

std::vector<char> random_blob(int w, int h, std::mt19937_64& rng) {
  std::vector<char> mask(static_cast<std::size_t>(w) * h, 0);
  int y = std::uniform_int_distribution<int>(0, h - 1)(rng);
  int x = std::uniform_int_distribution<int>(0, w - 1)(rng);
  const int steps = std::uniform_int_distribution<int>(5, w * h)(rng);
  for (int s = 0; s < steps; ++s) {
    mask[static_cast<std::size_t>(y) * w + x] = 1;
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
      case 0: y = std::max(0, y - 1); break;
      case 1: y = std::min(h - 1, y + 1); break;
      case 2: x = std::max(0, x - 1); break;
      default: x = std::min(w - 1, x + 1); break;
    }
  }
  // Keep at least one pixel outside so the component is a proper subset.
  mask[0] = mask[0] && std::count(mask.begin(), mask.end(), 1) < w * h;
  if (std::count(mask.begin(), mask.end(), 1) == 0) mask[static_cast<std::size_t>(w) * h - 1] = 1;
  return mask;
}

// Every (pixel, cell) pair checked explicitly.
std::vector<double> pooling_oracle(const FeatureVolume& f, const std::vector<char>& mask, int grid) {
  const int h = f.height();
  const int w = f.width();
  int top = h, left = w, bottom = 0, right = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask[static_cast<std::size_t>(y) * w + x]) continue;
      top = std::min(top, y);
      left = std::min(left, x);
      bottom = std::max(bottom, y + 1);
      right = std::max(right, x + 1);
    }
  }
  const int bh = bottom - top;
  const int bw = right - left;
  const int d = f.channels();
  std::vector<double> out(static_cast<std::size_t>(grid) * grid * d, 0.0);
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      for (int ch = 0; ch < d; ++ch) {
        bool any = false;
        double m = 0.0;
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            const int ry = y - top;
            const int rx = x - left;
            const bool in_cell = ry >= r * bh / grid && ry < (r + 1) * bh / grid && rx >= c * bw / grid &&
                                 rx < (c + 1) * bw / grid;
            if (!in_cell || !mask[static_cast<std::size_t>(y) * w + x]) continue;
            m = any ? std::max(m, f.at(ch, y, x)) : f.at(ch, y, x);
            any = true;
          }
        }
        out[(static_cast<std::size_t>(r) * grid + c) * d + ch] = any ? m : 0.0;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("whole-image component with G=1 is the global channelwise max") {
  const auto f = random_volume(5, 9, 11, 1);
  const auto tree = tree_for_mask(11, 9, std::vector<char>(99, 1));
  const auto desc = pool_component(f, tree, tree.root(), 1);
  REQUIRE(desc.cells.size() == 5);
  for (int c = 0; c < 5; ++c) {
    CHECK(desc.cells[c] == *std::max_element(f.plane(c).begin(), f.plane(c).end()));
  }
}

TEST_CASE("single-pixel component with G=1 is that pixel's feature vector") {
  const auto f = random_volume(4, 6, 6, 2);
  std::vector<char> mask(36, 0);
  mask[3 * 6 + 4] = 1;
  const auto tree = tree_for_mask(6, 6, mask);
  const auto desc = pool_component(f, tree, 36, 1);
  for (int c = 0; c < 4; ++c) CHECK(desc.cells[c] == f.at(c, 3, 4));
  CHECK(desc.box == BoundingBox{3, 4, 4, 5});
  const auto leaf = pool_component(f, tree, 3 * 6 + 4, 3);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(leaf.cell(r, c)[0] == ((r == 2 && c == 2) ? f.at(0, 3, 4) : 0.0));
  }
}

TEST_CASE("masked grid pooling matches the pixel-by-cell oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int grid = 1 + trial % 4;
    const auto f = random_volume(6, 12, 12, 100 + trial);
    const auto mask = random_blob(12, 12, rng);
    const auto tree = tree_for_mask(12, 12, mask);
    const int node = tree.leaf_count();
    const auto expected = pooling_oracle(f, mask, grid);
    CHECK(flatten_descriptor(pool_component(f, tree, node, grid)) == expected);
    const ComponentPooler pooler(f, tree);
    CHECK(pooler.pool(node, grid) == pool_component(f, tree, node, grid));
    const std::vector<int> nodes = {node, tree.root()};
    const auto flat = pooler.pool_flat(nodes, grid);
    CHECK(flat[0] == expected);
    CHECK(flat[1] == flatten_descriptor(pool_component(f, tree, tree.root(), grid)));
  }
}

TEST_CASE("flatten and unflatten") {
  SegmentDescriptor d;
  d.grid = 3;
  d.channels = 768;
  d.cells.assign(3 * 3 * 768, 0.25);
  CHECK(flatten_descriptor(d).size() == 6912);

  const auto f = random_volume(4, 5, 5, 4);
  const auto tree = tree_for_mask(5, 5, std::vector<char>(25, 1));
  const auto g1 = pool_component(f, tree, tree.root(), 1);
  const auto flat1 = flatten_descriptor(g1);
  CHECK(flat1.size() == 4);
  CHECK(std::equal(flat1.begin(), flat1.end(), g1.cell(0, 0).begin()));

  const auto g3 = pool_component(f, tree, tree.root(), 3);
  const auto back = unflatten_descriptor(flatten_descriptor(g3), 3, 4);
  CHECK(back.cells == g3.cells);
  CHECK(flatten_descriptor(back) == flatten_descriptor(g3));
  CHECK_THROWS_AS(unflatten_descriptor(flat1, 3, 4), std::invalid_argument);
}

TEST_CASE("growing a component never lowers a descriptor entry") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = random_volume(3, 10, 10, 200 + trial);
    auto mask = random_blob(10, 10, rng);
    const auto small = tree_for_mask(10, 10, mask);
    const auto base1 = flatten_descriptor(pool_component(f, small, 100, 1));
    const auto base3 = flatten_descriptor(pool_component(f, small, 100, 3));
    const auto box = component_box(small, 100);

    // Grow inside the bounding box (grid cells stay put) and check every grid entry.
    auto grown = mask;
    for (int y = box.top; y < box.bottom; ++y) {
      for (int x = box.left; x < box.right; ++x) {
        if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) grown[static_cast<std::size_t>(y) * 10 + x] = 1;
      }
    }
    if (std::count(grown.begin(), grown.end(), 1) == 100) grown[0] = 0;
    const auto in_box = tree_for_mask(10, 10, grown);
    if (component_box(in_box, 100) == box) {
      const auto g3 = flatten_descriptor(pool_component(f, in_box, 100, 3));
      for (std::size_t i = 0; i < g3.size(); ++i) {
        if (base3[i] != 0.0) CHECK(g3[i] >= base3[i]);
      }
    }

    // Grow anywhere; with one cell the descriptor is a plain masked max.
    for (int k = 0; k < 10; ++k) grown[std::uniform_int_distribution<int>(1, 99)(rng)] = 1;
    const auto anywhere = tree_for_mask(10, 10, grown);
    const auto g1 = flatten_descriptor(pool_component(f, anywhere, 100, 1));
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] >= base1[i]);
  }
}

TEST_CASE("features outside the component never reach the descriptor") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_volume(4, 12, 9, 300 + trial);
    const auto mask = random_blob(9, 12, rng);
    const auto tree = tree_for_mask(9, 12, mask);
    const auto before = pool_component(f, tree, tree.leaf_count(), 3);
    for (int c = 0; c < 4; ++c) {
      for (int p = 0; p < 108; ++p) {
        if (!mask[p]) f.plane(c)[p] = 1e6 * (p % 2 ? 1.0 : -1.0);
      }
    }
    CHECK(pool_component(f, tree, tree.leaf_count(), 3) == before);
  }
}

TEST_CASE("block upsampling the map and the component leaves the descriptor unchanged") {
  // 6x9 bounding box at offset (2, 1), both sides multiples of G = 3.
  const int w = 12, h = 10;
  std::mt19937_64 rng(7);
  std::vector<char> mask(static_cast<std::size_t>(w) * h, 0);
  for (int y = 2; y < 8; ++y) {
    for (int x = 1; x < 10; ++x) mask[static_cast<std::size_t>(y) * w + x] = std::uniform_int_distribution<int>(0, 1)(rng);
  }
  mask[2 * w + 1] = 1;
  mask[7 * w + 9] = 1;
  const auto f = random_volume(5, h, w, 8);
  const auto tree = tree_for_mask(w, h, mask);

  std::vector<char> mask2(static_cast<std::size_t>(4) * w * h, 0);
  for (int y = 0; y < 2 * h; ++y) {
    for (int x = 0; x < 2 * w; ++x) mask2[static_cast<std::size_t>(y) * 2 * w + x] = mask[(y / 2) * w + x / 2];
  }
  const auto tree2 = tree_for_mask(2 * w, 2 * h, mask2);
  const auto a = pool_component(f, tree, w * h, 3);
  const auto b = pool_component(upsample(f, 2), tree2, 4 * w * h, 3);
  CHECK(a.box.height() == 6);
  CHECK(a.box.width() == 9);
  CHECK(a.cells == b.cells);
}

TEST_CASE("pooling rejects bad arguments") {
  const auto f = random_volume(2, 4, 4, 9);
  const auto tree = tree_for_mask(4, 4, std::vector<char>(16, 1));
  CHECK_THROWS_AS(pool_component(f, tree, tree.size(), 1), std::out_of_range);
  CHECK_THROWS_AS(pool_component(f, tree, tree.root(), 0), std::invalid_argument);
  CHECK_THROWS_AS(pool_component(random_volume(2, 5, 4, 10), tree, tree.root(), 1), std::invalid_argument);
}
