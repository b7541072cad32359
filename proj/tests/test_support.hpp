#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "sceneparse/label_map.hpp"
#include "sceneparse/seghier.hpp"
#include "sceneparse/volume.hpp"

namespace testing {

inline sceneparse::FeatureVolume random_volume(int c, int h, int w, std::uint64_t seed, double lo = -1.0,
                                               double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  sceneparse::FeatureVolume v(c, h, w);
  for (double& x : v.data()) x = u(rng);
  return v;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// 4x2 image: pixels {0,1} C1, {2,3} C2, {4,5} C3, {6,7} C4; C5 = C1+C2, C6 = C3+C4, root = C5+C6.
struct CoverFigure {
  static constexpr int c1 = 8, c2 = 9, c3 = 10, c4 = 11, c5 = 12, c6 = 13, root = 14;
  sceneparse::SegTree tree;

  CoverFigure() {
    const std::vector<int> parents = {c1, c1, c2, c2, c3, c3, c4, c4, c5, c5, c6, c6, root, root, -1};
    tree = sceneparse::SegTree::from_parents(4, 2, parents);
  }
};

}  // namespace testing
