#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sceneparse/dataset.hpp"

namespace sceneparse {
namespace {

constexpr double kNoiseSigma = 8.0 / 255.0;
constexpr int kPlacementRetries = 64;
constexpr int kShapeMargin = 2;

enum class ShapeKind { circle, rectangle, triangle };

struct Shape {
  ShapeKind kind;
  double cy, cx;   // centre
  double a, b;     // radius | half height, half width | height, base
  int cls;

  bool contains(double y, double x) const {
    switch (kind) {
      case ShapeKind::circle:
        return (y - cy) * (y - cy) + (x - cx) * (x - cx) <= a * a;
      case ShapeKind::rectangle:
        return std::abs(y - cy) <= a && std::abs(x - cx) <= b;
      case ShapeKind::triangle: {
        // Apex at (cy - a/2, cx), base from (cy + a/2, cx -+ b/2).
        const double top = cy - a / 2;
        const double t = (y - top) / a;
        if (t < 0.0 || t > 1.0) return false;
        return std::abs(x - cx) <= t * b / 2;
      }
    }
    return false;
  }

  // Half extents of the bounding box.
  double half_h() const { return kind == ShapeKind::circle ? a : (kind == ShapeKind::rectangle ? a : a / 2); }
  double half_w() const { return kind == ShapeKind::circle ? a : (kind == ShapeKind::rectangle ? b : b / 2); }
};

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

std::array<double, 3> synth_class_color(int cls) {
  static constexpr std::array<std::array<double, 3>, 8> kColors = {{
      {0.55, 0.53, 0.47},  // background
      {0.82, 0.18, 0.16},
      {0.17, 0.30, 0.82},
      {0.88, 0.80, 0.15},
      {0.15, 0.68, 0.25},
      {0.62, 0.22, 0.75},
      {0.15, 0.78, 0.80},
      {0.95, 0.50, 0.10},
  }};
  if (cls < static_cast<int>(kColors.size())) return kColors[cls];
  const double hue = std::fmod(cls * 0.61803398875, 1.0) * 2.0 * std::numbers::pi;
  return {0.5 + 0.35 * std::cos(hue), 0.5 + 0.35 * std::cos(hue - 2.094), 0.5 + 0.35 * std::cos(hue + 2.094)};
}

Dataset synth_generate(const SynthOptions& options, SynthReport* report) {
  if (options.n_classes < 2) throw std::invalid_argument("synth_generate: need at least 2 classes");
  if (options.n_classes > 255) throw std::invalid_argument("synth_generate: at most 255 classes");
  if (options.count < 0) throw std::invalid_argument("synth_generate: negative count");
  if (options.height < 8 || options.width < 8) throw std::invalid_argument("synth_generate: image too small");

  Dataset data;
  data.split = options.split;
  data.class_names.push_back("background");
  static const char* kKinds[] = {"circle", "rectangle", "triangle"};
  for (int c = 1; c < options.n_classes; ++c) {
    std::string name = kKinds[(c - 1) % 3];
    if (c > 3) name += "_" + std::to_string(c);
    data.class_names.push_back(name);
  }

  std::mt19937_64 rng(options.seed);
  const int h = options.height;
  const int w = options.width;
  const double side = std::min(h, w);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, kNoiseSigma);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  for (int index = 0; index < options.count; ++index) {
    LabeledImage sample;
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d", options.split.c_str(), index);
    sample.name = name;
    sample.labels = LabelMap(h, w, 0);

    std::uniform_int_distribution<int> shape_count(1, 4);
    std::uniform_int_distribution<int> shape_class(1, options.n_classes - 1);
    const int wanted = shape_count(rng);
    std::vector<Shape> shapes;
    for (int s = 0; s < wanted; ++s) {
      const int cls = shape_class(rng);
      const auto kind = static_cast<ShapeKind>((cls - 1) % 3);
      for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
        Shape shape{kind, 0, 0, 0, 0, cls};
        switch (kind) {
          case ShapeKind::circle:
            shape.a = range(0.13, 0.22) * side;
            break;
          case ShapeKind::rectangle:
            shape.a = range(0.23, 0.40) * side / 2;
            shape.b = range(0.23, 0.40) * side / 2;
            break;
          case ShapeKind::triangle:
            shape.a = range(0.33, 0.56) * side;
            shape.b = range(0.33, 0.56) * side;
            break;
        }
        shape.cy = range(shape.half_h(), h - shape.half_h());
        shape.cx = range(shape.half_w(), w - shape.half_w());
        bool clear = true;
        for (int y = 0; y < h && clear; ++y) {
          for (int x = 0; x < w && clear; ++x) {
            if (!shape.contains(y + 0.5, x + 0.5)) continue;
            for (int dy = -kShapeMargin; dy <= kShapeMargin && clear; ++dy) {
              for (int dx = -kShapeMargin; dx <= kShapeMargin && clear; ++dx) {
                const int yy = y + dy;
                const int xx = x + dx;
                if (yy >= 0 && yy < h && xx >= 0 && xx < w && sample.labels.at(yy, xx) != 0) clear = false;
              }
            }
          }
        }
        if (!clear) continue;
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (shape.contains(y + 0.5, x + 0.5)) sample.labels.at(y, x) = static_cast<std::uint8_t>(cls);
          }
        }
        shapes.push_back(shape);
        break;
      }
    }
    if (report && static_cast<int>(shapes.size()) < wanted) {
      report->shortfalls.push_back({index, wanted, static_cast<int>(shapes.size())});
    }

    // Smooth luminance texture on the background: a few random plane waves.
    struct Wave {
      double fy, fx, phase, amp;
    };
    std::vector<Wave> waves(3);
    for (auto& wv : waves) {
      const double freq = range(1.0, 4.0) * 2.0 * std::numbers::pi / side;
      const double dir = range(0.0, std::numbers::pi);
      wv = {freq * std::sin(dir), freq * std::cos(dir), range(0.0, 2.0 * std::numbers::pi), range(0.015, 0.03)};
    }

    sample.image = FeatureVolume(3, h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int cls = sample.labels.at(y, x);
        const auto base = synth_class_color(cls);
        double texture = 0.0;
        if (cls == 0) {
          for (const auto& wv : waves) texture += wv.amp * std::sin(wv.fy * y + wv.fx * x + wv.phase);
        }
        for (int c = 0; c < 3; ++c) sample.image.at(c, y, x) = quantize(base[c] + texture + noise(rng));
      }
    }
    data.samples.push_back(std::move(sample));
  }
  return data;
}

}  // namespace sceneparse
