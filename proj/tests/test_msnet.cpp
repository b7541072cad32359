#include <doctest.h>

#include "sceneparse/dataset.hpp"
#include "sceneparse/msnet.hpp"
#include "test_support.hpp"

using namespace sceneparse;
using testing::random_volume;

namespace {

bool same_values(const std::vector<ParamRef>& a, const std::vector<ParamRef>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin(), b[i].values.end())) return false;
  }
  return true;
}

std::vector<std::vector<double>> snapshot(MultiscaleNet& net) {
  std::vector<std::vector<double>> out;
  for (const auto& p : net.parameters()) out.emplace_back(p.values.begin(), p.values.end());
  return out;
}

Dataset two_class_set() {
  SynthOptions opt;
  opt.seed = 21;
  opt.count = 8;
  opt.height = 32;
  opt.width = 32;
  opt.n_classes = 2;
  return synth_generate(opt);
}

NetConfig small_config() {
  NetConfig cfg = NetConfig::toy();
  cfg.n_scales = 2;
  cfg.norm_window = 7;
  return cfg;
}

}  // namespace

TEST_CASE("paper preset maps a 320x240 image to 256 maps per scale and 768 features") {
  MultiscaleNet net(NetConfig::paper(), 1);
  const auto dense = net.extract_features(random_volume(3, 240, 320, 2, 0.0, 1.0));
  REQUIRE(dense.per_scale.size() == 3);
  CHECK(dense.per_scale[0].channels() == 256);
  CHECK(dense.per_scale[0].height() == 60);
  CHECK(dense.per_scale[0].width() == 80);
  CHECK(dense.stride == 4);
  CHECK(dense.features.channels() == 768);
  CHECK(dense.features.height() == 240);
  CHECK(dense.features.width() == 320);
  CHECK(dense.features.all_finite());
}

TEST_CASE("toy preset maps a 3x16x16 level to 16x4x4") {
  MultiscaleNet net(NetConfig::toy(), 3);
  const auto out = net.forward_one_scale(random_volume(3, 16, 16, 4));
  CHECK(out.channels() == 16);
  CHECK(out.height() == 4);
  CHECK(out.width() == 4);
  CHECK(NetConfig::toy().stride() == 4);
}

TEST_CASE("shared parameters give identical outputs for identical levels") {
  MultiscaleNet net(NetConfig::toy(), 5);
  const auto level = random_volume(3, 20, 20, 6);
  Pyramid pyr;
  pyr.levels = {level, level};
  const auto outs = net.forward_pyramid(pyr);
  CHECK(outs[0] == outs[1]);
}

TEST_CASE("toy preset on 3x32x32 with two scales gives a 32x32x32 map") {
  NetConfig cfg = NetConfig::toy();
  cfg.n_scales = 2;
  cfg.norm_window = 7;
  MultiscaleNet net(cfg, 7);
  const auto dense = net.extract_features(random_volume(3, 32, 32, 8, 0.0, 1.0));
  CHECK(dense.features.channels() == 32);
  CHECK(dense.features.height() == 32);
  CHECK(dense.features.width() == 32);
}

TEST_CASE("a single scale is the stride-4 output upsampled by 4") {
  NetConfig cfg = NetConfig::toy();
  cfg.n_scales = 1;
  cfg.norm_window = 7;
  MultiscaleNet net(cfg, 9);
  const auto image = random_volume(3, 24, 16, 10, 0.0, 1.0);
  const auto dense = net.extract_features(image);
  CHECK(dense.features.channels() == 16);
  CHECK(dense.features == upsample(dense.per_scale[0], 4));
}

TEST_CASE("feature map keeps the input size when it is not a multiple of the stride") {
  NetConfig cfg = NetConfig::toy();
  cfg.n_scales = 3;
  cfg.norm_window = 5;
  MultiscaleNet net(cfg, 11);
  const auto dense = net.extract_features(random_volume(3, 37, 29, 12, 0.0, 1.0));
  CHECK(dense.features.channels() == 48);
  CHECK(dense.features.height() == 37);
  CHECK(dense.features.width() == 29);
  CHECK_THROWS_AS(net.extract_features(random_volume(3, 15, 40, 13)), std::invalid_argument);
}

TEST_CASE("upsample examples") {
  const auto v = random_volume(2, 3, 4, 14);
  CHECK(upsample(v, 1) == v);
  CHECK(upsample(FeatureVolume(1, 1, 1, 2.5), 3) == FeatureVolume(1, 3, 3, 2.5));
  const FeatureVolume m(1, 2, 2, std::vector<double>{1, 2, 3, 4});
  const FeatureVolume expected(1, 4, 4, std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4});
  CHECK(upsample(m, 2) == expected);
}

TEST_CASE("one parameter set serves every scale") {
  NetConfig one = NetConfig::toy();
  one.n_scales = 1;
  NetConfig three = NetConfig::toy();
  three.n_scales = 3;
  MultiscaleNet a(one, 15);
  MultiscaleNet b(three, 15);
  CHECK(same_values(a.parameters(), b.parameters()));

  three.norm_window = 5;
  MultiscaleNet net(three, 16);
  const auto level = random_volume(3, 16, 16, 17);
  Pyramid pyr;
  pyr.levels = {level, level, level};
  const auto before = net.forward_pyramid(pyr);
  net.banks()[0].weights()[0] += 0.5;
  const auto after = net.forward_pyramid(pyr);
  CHECK(before[0] != after[0]);
  CHECK(after[0] == after[1]);
  CHECK(after[1] == after[2]);
}

TEST_CASE("shifting the input by 4 pixels shifts the scale-1 map by one cell") {
  NetConfig cfg = NetConfig::toy();
  cfg.n_scales = 1;
  cfg.norm_window = 5;
  MultiscaleNet net(cfg, 18);
  const auto level = random_volume(3, 48, 48, 19);
  FeatureVolume shifted(3, 48, 48);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 48; ++y) {
      for (int x = 0; x < 48; ++x) shifted.at(c, y, x) = level.at(c, y, std::max(0, x - 4));
    }
  }
  const auto a = net.forward_one_scale(level);
  const auto b = net.forward_one_scale(shifted);
  const int margin = 4;
  int compared = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = margin; y < a.height() - margin; ++y) {
      for (int x = margin; x < a.width() - margin; ++x) {
        CHECK(b.at(c, y, x + 1) == a.at(c, y, x));
        ++compared;
      }
    }
  }
  CHECK(compared > 0);
}

TEST_CASE("stage-1 training loss decreases over the first five epochs") {
  const auto data = two_class_set();
  MultiscaleNet net(small_config(), 22);
  Stage1Options opt;
  opt.epochs = 5;
  opt.seed = 23;
  opt.samples_per_image = 128;
  const auto result = train_stage1(net, data, opt);
  REQUIRE(result.epoch_losses.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) CHECK(result.epoch_losses[e] < result.epoch_losses[e - 1]);

  MultiscaleNet again(small_config(), 22);
  const auto repeat = train_stage1(again, data, opt);
  CHECK(repeat.epoch_losses == result.epoch_losses);
  CHECK(again.banks()[2].weights() == net.banks()[2].weights());
}

TEST_CASE("a zero learning rate leaves the parameters unchanged") {
  const auto data = two_class_set();
  MultiscaleNet net(small_config(), 24);
  const auto before = snapshot(net);
  Stage1Options opt;
  opt.epochs = 1;
  opt.lr = 0.0;
  opt.samples_per_image = 32;
  train_stage1(net, data, opt);
  CHECK(snapshot(net) == before);
}

TEST_CASE("balanced sampling equalizes a 90/10 class skew") {
  LabelMap map(100, 100, 0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 100; ++x) map.at(y, x) = 1;
  }
  std::mt19937_64 rng(25);
  const std::vector<const LabelMap*> maps = {&map};
  const auto samples = sample_pixels(maps, 2, Sampling::balanced, 20000, rng);
  REQUIRE(samples.size() == 20000);
  std::array<int, 2> hist{};
  for (const auto& s : samples) {
    CHECK(map.at(s.y, s.x) == s.label);
    ++hist[s.label];
  }
  CHECK(std::abs(hist[0] / 20000.0 - 0.5) <= 0.02);
  CHECK(std::abs(hist[1] / 20000.0 - 0.5) <= 0.02);

  const auto natural = sample_pixels(maps, 2, Sampling::natural, 20000, rng);
  int ones = 0;
  for (const auto& s : natural) ones += s.label == 1;
  CHECK(std::abs(ones / 20000.0 - 0.1) <= 0.02);
}

TEST_CASE("balanced sampling reports classes with no pixels") {
  const LabelMap map(8, 8, 1);
  std::mt19937_64 rng(26);
  std::vector<int> missing;
  const std::vector<const LabelMap*> maps = {&map};
  const auto samples = sample_pixels(maps, 3, Sampling::balanced, 30, rng, &missing);
  CHECK(samples.size() == 30);
  CHECK(missing == std::vector<int>{0, 2});
}
