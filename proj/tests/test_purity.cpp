#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sceneparse/dataset.hpp"
#include "sceneparse/pipeline.hpp"
#include "sceneparse/purity.hpp"
#include "sceneparse/reference.hpp"
#include "test_support.hpp"

using namespace sceneparse;
using testing::CoverFigure;
using testing::random_vector;

namespace {

void random_costs(SegTree& tree, std::mt19937_64& rng, int n_classes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int id : tree.candidates()) {
    std::vector<double> counts(n_classes);
    for (double& c : counts) c = u(rng);
    tree.node(id).distribution = ClassDistribution::from_counts(counts);
    tree.node(id).cost = u(rng);
  }
}

// Minimal cost along the explicit path from the pixel's parent to the root, deeper on ties.
int path_minimum(const SegTree& tree, int pixel) {
  if (tree.size() == 1) return 0;
  int best = -1;
  for (int v = tree.node(pixel).parent; v >= 0; v = tree.node(v).parent) {
    if (best < 0 || *tree.node(v).cost < *tree.node(best).cost) best = v;
  }
  return best;
}

class PurityLoss : public Objective {
 public:
  PurityLoss(PurityClassifier& clf, std::vector<ComponentExample> examples)
      : clf_(clf), examples_(std::move(examples)) {}
  std::vector<ParamRef> parameters() override { return clf_.parameters(); }
  double evaluate(Gradients* grads) override {
    double loss = 0.0;
    for (const auto& e : examples_) loss += clf_.loss_and_gradient(e.descriptor, e.target, grads);
    return loss;
  }

 private:
  PurityClassifier& clf_;
  std::vector<ComponentExample> examples_;
};

}  // namespace

TEST_CASE("a classifier with zero weights predicts the uniform distribution") {
  PurityClassifier clf(6, 4, 5);
  const auto d = classify_component(random_vector(6, 1), clf);
  for (double p : d.probs()) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("hand-set 2-2-2 classifier matches a hand-evaluated forward pass") {
  PurityClassifier clf(2, 2, 2);
  clf.w1() = {1.0, 2.0, -1.0, 0.5};
  clf.b1() = {0.1, -0.2};
  clf.w2() = {0.3, -0.7, 1.2, 0.4};
  const std::vector<double> x = {0.5, -0.25};
  const double h0 = std::tanh(1.0 * 0.5 + 2.0 * -0.25 + 0.1);
  const double h1 = std::tanh(-1.0 * 0.5 + 0.5 * -0.25 - 0.2);
  const double y0 = 0.3 * h0 - 0.7 * h1;
  const double y1 = 1.2 * h0 + 0.4 * h1;
  const double p0 = 1.0 / (1.0 + std::exp(y1 - y0));
  const auto d = classify_component(x, clf);
  CHECK(std::abs(d[0] - p0) < 1e-12);
  CHECK(std::abs(d[1] - (1.0 - p0)) < 1e-12);
  CHECK_THROWS_AS(classify_component(std::vector<double>{1.0}, clf), std::invalid_argument);
}

TEST_CASE("classifier outputs sum to one") {
  PurityClassifier clf(10, 7, 4);
  std::mt19937_64 rng(2);
  clf.init_uniform(rng);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto d = classify_component(random_vector(10, 100 + seed, -5.0, 5.0), clf);
    CHECK(std::abs(std::accumulate(d.probs().begin(), d.probs().end(), 0.0) - 1.0) < 1e-9);
  }
}

TEST_CASE("purity cost examples and bounds") {
  CHECK(purity_cost(ClassDistribution::one_hot(5, 2)) == 0.0);
  CHECK(purity_cost(ClassDistribution::uniform(8)) == doctest::Approx(std::log(8.0)).epsilon(1e-14));
  CHECK(purity_cost(ClassDistribution::uniform(8)) == doctest::Approx(2.07944).epsilon(1e-5));
  const double s = purity_cost(ClassDistribution({0.5, 0.25, 0.25}));
  CHECK(s == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(s == doctest::Approx(1.03972).epsilon(1e-5));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto counts = random_vector(6, seed, 0.0, 1.0);
    counts[seed % 6] = 0.0;
    const double c = purity_cost(ClassDistribution::from_counts(counts));
    CHECK(c >= 0.0);
    CHECK(c <= std::log(6.0) + 1e-12);
  }
}

TEST_CASE("cover of the figure example is C1, C3, C4, C5 and C2 takes the class of C5") {
  CoverFigure fig;
  auto& t = fig.tree;
  const std::vector<std::pair<int, double>> costs = {{CoverFigure::c1, 0.1}, {CoverFigure::c2, 0.9},
                                                     {CoverFigure::c3, 0.2}, {CoverFigure::c4, 0.2},
                                                     {CoverFigure::c5, 0.3}, {CoverFigure::c6, 0.8},
                                                     {CoverFigure::root, 1.0}};
  for (const auto& [node, cost] : costs) {
    t.node(node).cost = cost;
    t.node(node).distribution = ClassDistribution::one_hot(7, node - CoverFigure::c1);
  }
  const auto cover = optimal_cover(t);
  CHECK(cover.cover_set == std::vector<int>{CoverFigure::c1, CoverFigure::c3, CoverFigure::c4, CoverFigure::c5});
  CHECK(cover.chosen == std::vector<int>{8, 8, 12, 12, 10, 10, 11, 11});
  const auto labels = label_image(t, cover);
  CHECK(labels[2] == 4);
  CHECK(labels[3] == 4);
  CHECK(labels[0] == 0);
  CHECK(labels[4] == 2);
  CHECK(labels[7] == 3);
}

TEST_CASE("root-only tree assigns every pixel to the root") {
  std::vector<int> parents(13, 12);
  parents[12] = -1;
  auto tree = SegTree::from_parents(4, 3, parents);
  tree.node(12).cost = 0.7;
  tree.node(12).distribution = ClassDistribution::one_hot(3, 1);
  const auto cover = optimal_cover(tree);
  CHECK(cover.chosen == std::vector<int>(12, 12));
  CHECK(cover.cover_set == std::vector<int>{12});
  CHECK(label_image(tree, cover) == LabelMap(3, 4, 1));
}

TEST_CASE("optimal cover equals explicit path minima on random trees") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = std::uniform_int_distribution<int>(1, 8)(rng);
    const int h = std::uniform_int_distribution<int>(1, 8)(rng);
    auto tree = reference::random_tree(w, h, rng);
    random_costs(tree, rng, 4);
    const auto cover = optimal_cover(tree);
    double total = 0.0;
    double brute = 0.0;
    for (int p = 0; p < tree.leaf_count(); ++p) {
      const int expected = path_minimum(tree, p);
      CHECK(cover.chosen[p] == expected);
      const auto px = tree.pixels(cover.chosen[p]);
      CHECK(std::find(px.begin(), px.end(), p) != px.end());
      total += *tree.node(cover.chosen[p]).cost;
      brute += *tree.node(expected).cost;
    }
    CHECK(total == brute);
    CHECK(total == doctest::Approx(reference::brute_force_cover(tree).total_cost).epsilon(1e-12));

    std::vector<char> covered(tree.leaf_count(), 0);
    for (int k : cover.cover_set) {
      for (int p : tree.pixels(k)) covered[p] = 1;
    }
    CHECK(std::count(covered.begin(), covered.end(), 1) == tree.leaf_count());

    CHECK(label_image(tree, cover) == reference::relabel(tree, cover.chosen));
    for (int p = 0; p < tree.leaf_count(); ++p) {
      for (int q = p + 1; q < tree.leaf_count(); ++q) {
        if (tree.node(p).parent == tree.node(q).parent) CHECK(cover.chosen[p] == cover.chosen[q]);
      }
    }
  }
}

TEST_CASE("scaling every cost by a positive constant keeps the cover") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto tree = reference::random_tree(6, 5, rng);
    random_costs(tree, rng, 3);
    const auto before = optimal_cover(tree);
    const auto labels = label_image(tree, before);
    for (int id : tree.candidates()) tree.node(id).cost = *tree.node(id).cost * 3.75;
    const auto after = optimal_cover(tree);
    CHECK(after.chosen == before.chosen);
    CHECK(label_image(tree, after) == labels);
  }
}

TEST_CASE("cover ties go to the deeper node and missing costs are rejected") {
  CoverFigure fig;
  auto& t = fig.tree;
  for (int id : t.candidates()) t.node(id).cost = 0.5;
  const auto cover = optimal_cover(t);
  CHECK(cover.cover_set == std::vector<int>{8, 9, 10, 11});
  t.node(CoverFigure::c6).cost.reset();
  CHECK_THROWS_AS(optimal_cover(t), std::invalid_argument);
}

TEST_CASE("labels come from one-hot class 2 everywhere") {
  std::mt19937_64 rng(5);
  auto tree = reference::random_tree(7, 4, rng);
  random_costs(tree, rng, 4);
  for (int id : tree.candidates()) tree.node(id).distribution = ClassDistribution::one_hot(4, 2);
  CHECK(label_image(tree, optimal_cover(tree)) == LabelMap(4, 7, 2));
}

TEST_CASE("component targets are normalized label histograms") {
  CoverFigure fig;
  LabelMap truth(2, 4);
  const std::vector<std::uint8_t> labels = {1, 1, 1, 2, 0, 0, 2, 2};
  std::copy(labels.begin(), labels.end(), truth.data().begin());
  const auto hist = label_histograms(fig.tree, truth, 3);
  auto target = [&](int node) {
    return ClassDistribution::from_counts(std::span<const double>(hist.data() + node * 3, 3));
  };
  CHECK(target(CoverFigure::c1) == ClassDistribution::one_hot(3, 1));
  CHECK(target(CoverFigure::c2) == ClassDistribution({0.0, 0.5, 0.5}));
  CHECK(target(CoverFigure::c3) == ClassDistribution::one_hot(3, 0));

  truth[0] = LabelMap::kVoid;
  assign_ground_truth_costs(fig.tree, truth, 3);
  CHECK(*fig.tree.node(CoverFigure::c1).distribution == ClassDistribution::one_hot(3, 1));
  CHECK(*fig.tree.node(CoverFigure::c1).cost == 0.0);
  CHECK(*fig.tree.node(CoverFigure::c2).cost == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("purity classifier gradient passes the finite-difference check") {
  PurityClassifier clf(9, 6, 4);
  std::mt19937_64 rng(6);
  clf.init_uniform(rng);
  std::vector<ComponentExample> examples;
  for (std::uint64_t i = 0; i < 5; ++i) {
    examples.push_back({random_vector(9, 10 + i), ClassDistribution::from_counts(random_vector(4, 20 + i, 0.0, 1.0))});
  }
  examples.push_back({random_vector(9, 30), ClassDistribution::one_hot(4, 1)});
  PurityLoss loss(clf, examples);
  CHECK(grad_check(loss) < 1e-4);
}

TEST_CASE("stage-2 training on toy components lowers the mean KL over the first five epochs") {
  SynthOptions opt;
  opt.seed = 7;
  opt.count = 6;
  opt.height = 32;
  opt.width = 32;
  const auto data = synth_generate(opt);
  NetConfig cfg = NetConfig::toy();
  cfg.n_scales = 2;
  cfg.norm_window = 7;
  const MultiscaleNet net(cfg, 8);
  const auto examples = collect_component_examples(net, data, 3, 20, ComponentSampling{});
  REQUIRE(!examples.empty());
  for (const auto& e : examples) CHECK(e.descriptor.size() == static_cast<std::size_t>(9 * cfg.feature_dims()));

  Stage2Options s2;
  s2.epochs = 5;
  s2.seed = 9;
  const auto result = train_purity_classifier(examples, data.n_classes(), s2);
  REQUIRE(result.epoch_losses.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) CHECK(result.epoch_losses[e] < result.epoch_losses[e - 1]);
  const auto again = train_purity_classifier(examples, data.n_classes(), s2);
  CHECK(again.epoch_losses == result.epoch_losses);
  CHECK(again.classifier.w2() == result.classifier.w2());
}
