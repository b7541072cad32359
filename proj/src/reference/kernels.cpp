#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sceneparse/pyramid.hpp"
#include "sceneparse/reference.hpp"

namespace sceneparse::reference {

FeatureVolume conv2d(const FeatureVolume& input, const FilterBank& bank, int pad) {
  const int k = bank.kernel_size();
  const int out_h = input.height() + 2 * pad - k + 1;
  const int out_w = input.width() + 2 * pad - k + 1;
  FeatureVolume out(bank.out_channels(), out_h, out_w);
  const auto conns = bank.connections();
  for (int p = 0; p < bank.out_channels(); ++p) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double acc = bank.biases()[p];
        for (std::size_t ci = 0; ci < conns.size(); ++ci) {
          if (conns[ci].out != p) continue;
          const auto kernel = bank.kernel(static_cast<int>(ci));
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const int iy = y + ky - pad;
              const int ix = x + kx - pad;
              if (iy < 0 || iy >= input.height() || ix < 0 || ix >= input.width()) continue;
              acc += kernel[ky * k + kx] * input.at(conns[ci].in, iy, ix);
            }
          }
        }
        out.at(p, y, x) = acc;
      }
    }
  }
  return out;
}

FeatureVolume maxpool2(const FeatureVolume& input) {
  const int out_h = (input.height() + 1) / 2;
  const int out_w = (input.width() + 1) / 2;
  FeatureVolume out(input.channels(), out_h, out_w);
  for (int c = 0; c < input.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        for (int yy = 2 * y; yy < std::min(2 * y + 2, input.height()); ++yy) {
          for (int xx = 2 * x; xx < std::min(2 * x + 2, input.width()); ++xx) best = std::max(best, input.at(c, yy, xx));
        }
        out.at(c, y, x) = best;
      }
    }
  }
  return out;
}

FeatureVolume local_normalize(const FeatureVolume& image, int window) {
  const int h = image.height();
  const int w = image.width();
  const int r = window / 2;
  FeatureVolume out(image.channels(), h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::vector<double> values;
      for (int c = 0; c < image.channels(); ++c) {
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            values.push_back(image.at(c, std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1)));
          }
        }
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      var /= static_cast<double>(values.size());
      const double sd = std::max(std::sqrt(var), kNormStdFloor);
      for (int c = 0; c < image.channels(); ++c) out.at(c, y, x) = (image.at(c, y, x) - mean) / sd;
    }
  }
  return out;
}

std::vector<int> node_pixels(const SegTree& tree, int node) {
  std::vector<int> out;
  for (int leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    for (int v = leaf; v >= 0; v = tree.node(v).parent) {
      if (v == node) {
        out.push_back(leaf);
        break;
      }
    }
  }
  return out;
}

std::vector<double> pool_component(const FeatureVolume& features, const SegTree& tree, int node, int grid) {
  const int w = tree.width();
  std::vector<char> member(static_cast<std::size_t>(tree.leaf_count()), 0);
  int top = tree.height();
  int left = w;
  int bottom = -1;
  int right = -1;
  for (int p : node_pixels(tree, node)) {
    member[p] = 1;
    top = std::min(top, p / w);
    bottom = std::max(bottom, p / w);
    left = std::min(left, p % w);
    right = std::max(right, p % w);
  }
  const int bh = bottom - top + 1;
  const int bw = right - left + 1;
  const int channels = features.channels();
  std::vector<double> out(static_cast<std::size_t>(grid) * grid * channels, 0.0);
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        bool any = false;
        double best = 0.0;
        for (int y = 0; y < tree.height(); ++y) {
          for (int x = 0; x < w; ++x) {
            if (!member[static_cast<std::size_t>(y) * w + x]) continue;
            // Cell of a pixel: the r with floor(r*bh/G) <= y-top < floor((r+1)*bh/G).
            const int ry = y - top;
            const int rx = x - left;
            if (ry < (r * bh) / grid || ry >= ((r + 1) * bh) / grid) continue;
            if (rx < (c * bw) / grid || rx >= ((c + 1) * bw) / grid) continue;
            const double v = features.at(ch, y, x);
            if (!any || v > best) best = v;
            any = true;
          }
        }
        out[(static_cast<std::size_t>(r) * grid + c) * channels + ch] = any ? best : 0.0;
      }
    }
  }
  return out;
}

Metrics count_metrics(const LabelMap& predicted, const LabelMap& truth, int n_classes) {
  Metrics m;
  std::uint64_t correct = 0;
  std::vector<std::uint64_t> hits(n_classes, 0);
  std::vector<std::uint64_t> totals(n_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == LabelMap::kVoid) continue;
    ++m.valid_pixels;
    ++totals[truth[i]];
    if (predicted[i] == truth[i]) {
      ++correct;
      ++hits[truth[i]];
    }
  }
  if (m.valid_pixels == 0) throw std::invalid_argument("no valid pixels");
  m.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(m.valid_pixels);
  double sum = 0.0;
  int present = 0;
  m.per_class_recall.assign(n_classes, std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < n_classes; ++c) {
    if (totals[c] == 0) continue;
    m.per_class_recall[c] = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
    sum += m.per_class_recall[c];
    ++present;
  }
  m.class_accuracy = sum / present;
  return m;
}

}  // namespace sceneparse::reference
