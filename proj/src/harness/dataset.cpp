#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "sceneparse/dataset.hpp"
#include "sceneparse/png_io.hpp"

namespace sceneparse {

void Dataset::validate() const {
  for (const auto& s : samples) {
    if (s.image.height() != s.labels.height() || s.image.width() != s.labels.width()) {
      throw std::invalid_argument("dataset: image and label sizes differ for " + s.name);
    }
    for (std::uint8_t l : s.labels.data()) {
      if (l != LabelMap::kVoid && l >= n_classes()) {
        throw std::invalid_argument("dataset: label " + std::to_string(l) + " in " + s.name +
                                    " exceeds the class count " + std::to_string(n_classes()));
      }
    }
  }
}

JitterParams draw_jitter(std::mt19937_64& rng) {
  std::bernoulli_distribution flip(0.5);
  std::uniform_real_distribution<double> angle(-kMaxJitterDegrees, kMaxJitterDegrees);
  JitterParams p;
  p.flip = flip(rng);
  p.angle_degrees = angle(rng);
  return p;
}

std::pair<FeatureVolume, LabelMap> apply_jitter(const FeatureVolume& image, const LabelMap& labels,
                                                const JitterParams& params) {
  const int h = image.height();
  const int w = image.width();
  if (labels.height() != h || labels.width() != w) throw std::invalid_argument("jitter: image/label size mismatch");

  FeatureVolume flipped = image;
  LabelMap flipped_labels = labels;
  if (params.flip) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < image.channels(); ++c) flipped.at(c, y, x) = image.at(c, y, w - 1 - x);
        flipped_labels.at(y, x) = labels.at(y, w - 1 - x);
      }
    }
  }
  if (params.angle_degrees == 0.0) return {std::move(flipped), std::move(flipped_labels)};

  const double theta = params.angle_degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cy = (h - 1) / 2.0;
  const double cx = (w - 1) / 2.0;
  FeatureVolume out(image.channels(), h, w);
  LabelMap out_labels(h, w, LabelMap::kVoid);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Inverse rotation: where does this output pixel come from?
      const double sx = cs * (x - cx) + sn * (y - cy) + cx;
      const double sy = -sn * (x - cx) + cs * (y - cy) + cy;

      const int nx = static_cast<int>(std::lround(sx));
      const int ny = static_cast<int>(std::lround(sy));
      if (nx >= 0 && nx < w && ny >= 0 && ny < h) out_labels.at(y, x) = flipped_labels.at(ny, nx);

      const double fx = std::clamp(sx, 0.0, w - 1.0);
      const double fy = std::clamp(sy, 0.0, h - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int y0 = static_cast<int>(std::floor(fy));
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double ax = fx - x0;
      const double ay = fy - y0;
      for (int c = 0; c < image.channels(); ++c) {
        out.at(c, y, x) = (1 - ay) * ((1 - ax) * flipped.at(c, y0, x0) + ax * flipped.at(c, y0, x1)) +
                          ay * ((1 - ax) * flipped.at(c, y1, x0) + ax * flipped.at(c, y1, x1));
      }
    }
  }
  return {std::move(out), std::move(out_labels)};
}

std::pair<FeatureVolume, LabelMap> jitter(const FeatureVolume& image, const LabelMap& labels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return apply_jitter(image, labels, draw_jitter(rng));
}

Dataset load_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  Dataset data;
  data.split = root.filename().string();
  std::ifstream classes(root / "classes.txt");
  if (!classes) throw std::runtime_error("missing " + (root / "classes.txt").string());
  for (std::string line; std::getline(classes, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) data.class_names.push_back(line);
  }
  if (data.class_names.empty()) throw std::runtime_error("no classes listed in " + (root / "classes.txt").string());

  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(root / "images")) {
    if (entry.path().extension() == ".png") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  for (const auto& path : images) {
    const auto label_path = root / "labels" / path.filename();
    if (!fs::exists(label_path)) throw std::runtime_error("no label map for " + path.string());
    data.samples.push_back({path.stem().string(), read_rgb_png(path), read_label_png(label_path)});
  }
  data.validate();
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "images");
  fs::create_directories(root / "labels");
  std::ofstream classes(root / "classes.txt");
  for (const auto& name : data.class_names) classes << name << '\n';
  if (!classes) throw std::runtime_error("cannot write " + (root / "classes.txt").string());
  for (const auto& s : data.samples) {
    write_rgb_png(root / "images" / (s.name + ".png"), s.image);
    write_label_png(root / "labels" / (s.name + ".png"), s.labels);
  }
}

}  // namespace sceneparse
