#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "sceneparse/descriptor.hpp"
#include "sceneparse/msnet.hpp"
#include "sceneparse/purity.hpp"
#include "sceneparse/pyramid.hpp"
#include "sceneparse/reference.hpp"

namespace sceneparse::reference {
namespace {

using Clock = std::chrono::steady_clock;

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  Clock::time_point start_ = Clock::now();
};

FeatureVolume random_volume(int c, int h, int w, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  FeatureVolume v(c, h, w);
  for (double& x : v.data()) x = u(rng);
  return v;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

FilterBank random_bank(int in, int out, int k, std::mt19937_64& rng) {
  std::vector<Connection> conns;
  std::vector<int> inputs(in);
  std::iota(inputs.begin(), inputs.end(), 0);
  for (int o = 0; o < out; ++o) {
    std::shuffle(inputs.begin(), inputs.end(), rng);
    const int fan = uniform_int(rng, 1, in);
    for (int j = 0; j < fan; ++j) conns.push_back({o, inputs[j]});
  }
  FilterBank bank(in, out, k, conns);
  bank.init_uniform(rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& b : bank.biases()) b = u(rng);
  return bank;
}

// Costs on a small discrete set so that ties actually occur.
void assign_random_costs(SegTree& tree, std::mt19937_64& rng, bool discrete) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int id : tree.candidates()) tree.node(id).cost = discrete ? 0.25 * uniform_int(rng, 0, 4) : u(rng);
}

SuiteResult finish(std::string name, const Timer& t, int failures, int cases, const std::string& first_failure) {
  SuiteResult r;
  r.name = std::move(name);
  r.passed = failures == 0;
  r.seconds = t.seconds();
  std::ostringstream os;
  os << (cases - failures) << "/" << cases << " cases agree";
  if (failures) os << "; first mismatch: " << first_failure;
  r.detail = os.str();
  return r;
}

class Stage1Objective : public Objective {
 public:
  Stage1Objective(MultiscaleNet& net, LinearClassifier& clf, Pyramid pyramid, std::vector<PixelSample> pixels)
      : net_(net), clf_(clf), pyramid_(std::move(pyramid)), pixels_(std::move(pixels)) {}
  std::vector<ParamRef> parameters() override {
    auto p = net_.parameters();
    p.push_back({clf_.weights(), true});
    return p;
  }
  double evaluate(Gradients* grads) override { return stage1_batch_loss(net_, clf_, pyramid_, pixels_, grads); }

 private:
  MultiscaleNet& net_;
  LinearClassifier& clf_;
  Pyramid pyramid_;
  std::vector<PixelSample> pixels_;
};

class PurityObjective : public Objective {
 public:
  PurityObjective(PurityClassifier& clf, std::vector<ComponentExample> examples)
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

SuiteResult check_conv_kernels(std::uint64_t seed, int cases) {
  Timer t;
  std::mt19937_64 rng(seed);
  int failures = 0;
  std::string first;
  for (int i = 0; i < cases; ++i) {
    const int in = uniform_int(rng, 1, 4);
    const int k = 2 * uniform_int(rng, 0, 2) + 1;
    const int pad = uniform_int(rng, 0, k / 2);
    const int h = uniform_int(rng, k, 12);
    const int w = uniform_int(rng, k, 12);
    const auto bank = random_bank(in, uniform_int(rng, 1, 5), k, rng);
    const auto input = random_volume(in, h, w, rng);
    const double conv_err = max_abs_diff(sceneparse::conv2d(input, bank, pad), reference::conv2d(input, bank, pad));
    const bool pool_ok = sceneparse::maxpool2(input).output == reference::maxpool2(input);
    if (conv_err > 1e-12 || !pool_ok) {
      if (!failures++) first = "case " + std::to_string(i) + " conv error " + std::to_string(conv_err);
    }
  }
  return finish("conv2d/maxpool2 vs serial loops", t, failures, cases, first);
}

SuiteResult check_local_normalize(std::uint64_t seed, int cases) {
  Timer t;
  std::mt19937_64 rng(seed);
  int failures = 0;
  std::string first;
  for (int i = 0; i < cases; ++i) {
    const int window = 2 * uniform_int(rng, 1, 3) + 1;
    const auto image = random_volume(uniform_int(rng, 1, 3), uniform_int(rng, window, 16),
                                     uniform_int(rng, window, 16), rng, 0.0, 1.0);
    const double err = max_abs_diff(sceneparse::local_normalize(image, window), reference::local_normalize(image, window));
    if (err > 1e-9) {
      if (!failures++) first = "case " + std::to_string(i) + " error " + std::to_string(err);
    }
  }
  return finish("local_normalize vs per-pixel windows", t, failures, cases, first);
}

SuiteResult check_mst(std::uint64_t seed, int grids) {
  Timer t;
  std::mt19937_64 rng(seed);
  int failures = 0;
  std::string first;
  for (int i = 0; i < grids; ++i) {
    const int h = uniform_int(rng, 1, 8);
    const int w = uniform_int(rng, 1, 8);
    auto image = random_volume(3, h, w, rng, 0.0, 1.0);
    if (i % 2) {
      for (double& v : image.data()) v = std::round(v * 3.0) / 3.0;  // many equal weights
    }
    const auto tree = build_merge_tree(build_pixel_graph(image));
    if (merge_weights(tree) != prim_mst_weights(image) || !tree.check_invariants().empty()) {
      if (!failures++) first = "grid " + std::to_string(i) + " (" + std::to_string(h) + "x" + std::to_string(w) + ")";
    }
  }
  return finish("merge tree weights vs Prim MST", t, failures, grids, first);
}

SuiteResult check_pooling(std::uint64_t seed, int cases) {
  Timer t;
  std::mt19937_64 rng(seed);
  int failures = 0;
  std::string first;
  for (int i = 0; i < cases; ++i) {
    const int h = uniform_int(rng, 1, 10);
    const int w = uniform_int(rng, 1, 10);
    const int grid = uniform_int(rng, 1, 5);
    const auto features = random_volume(uniform_int(rng, 1, 4), h, w, rng);
    const auto tree = random_tree(w, h, rng);
    const int node = uniform_int(rng, 0, tree.size() - 1);
    const auto expected = reference::pool_component(features, tree, node, grid);
    const auto got = flatten_descriptor(sceneparse::pool_component(features, tree, node, grid));
    const ComponentPooler pooler(features, tree);
    const std::vector<int> one{node};
    const auto batched = pooler.pool_flat(one, grid);
    if (got != expected || batched.front() != expected) {
      if (!failures++) first = "case " + std::to_string(i) + " node " + std::to_string(node);
    }
  }
  return finish("pool_component vs nested-loop oracle", t, failures, cases, first);
}

SuiteResult check_cover(std::uint64_t seed, int trees) {
  Timer t;
  std::mt19937_64 rng(seed);
  int failures = 0;
  std::string first;
  for (int i = 0; i < trees; ++i) {
    auto tree = random_tree(uniform_int(rng, 1, 8), uniform_int(rng, 1, 8), rng);
    assign_random_costs(tree, rng, i % 2 == 1);
    const auto fast = optimal_cover(tree);
    const auto brute = brute_force_cover(tree);
    double total = 0.0;
    for (int k : fast.chosen) total += *tree.node(k).cost;
    if (fast.chosen != brute.chosen || total != brute.total_cost) {
      if (!failures++) first = "tree " + std::to_string(i);
    }
  }
  return finish("optimal cover vs exhaustive path minimum", t, failures, trees, first);
}

SuiteResult check_labeling(std::uint64_t seed, int trees) {
  Timer t;
  std::mt19937_64 rng(seed);
  int failures = 0;
  std::string first;
  for (int i = 0; i < trees; ++i) {
    auto tree = random_tree(uniform_int(rng, 1, 8), uniform_int(rng, 1, 8), rng);
    const int n_classes = uniform_int(rng, 2, 5);
    assign_random_costs(tree, rng, true);
    for (int id : tree.candidates()) {
      std::vector<double> counts(n_classes);
      for (double& c : counts) c = uniform_int(rng, 0, 2);  // ties between classes are common
      if (std::accumulate(counts.begin(), counts.end(), 0.0) == 0.0) counts[0] = 1.0;
      tree.node(id).distribution = ClassDistribution::from_counts(counts);
    }
    const auto cover = optimal_cover(tree);
    if (label_image(tree, cover) != relabel(tree, cover.chosen)) {
      if (!failures++) first = "tree " + std::to_string(i);
    }
  }
  return finish("label_image vs per-pixel recomputation", t, failures, trees, first);
}

SuiteResult check_metrics(std::uint64_t seed, int cases) {
  Timer t;
  std::mt19937_64 rng(seed);
  int failures = 0;
  std::string first;
  for (int i = 0; i < cases; ++i) {
    const int n_classes = uniform_int(rng, 1, 6);
    const int h = uniform_int(rng, 1, 12);
    const int w = uniform_int(rng, 1, 12);
    LabelMap truth(h, w);
    LabelMap pred(h, w);
    for (std::size_t p = 0; p < truth.size(); ++p) {
      truth[p] = uniform_int(rng, 0, 9) == 0 ? LabelMap::kVoid : static_cast<std::uint8_t>(uniform_int(rng, 0, n_classes - 1));
      pred[p] = static_cast<std::uint8_t>(uniform_int(rng, 0, n_classes - 1));
    }
    truth[0] = 0;
    const auto a = evaluate(pred, truth, n_classes);
    const auto b = count_metrics(pred, truth, n_classes);
    if (std::abs(a.pixel_accuracy - b.pixel_accuracy) > 1e-12 || std::abs(a.class_accuracy - b.class_accuracy) > 1e-12 ||
        a.valid_pixels != b.valid_pixels) {
      if (!failures++) first = "case " + std::to_string(i);
    }
  }
  return finish("confusion-matrix metrics vs direct counting", t, failures, cases, first);
}

SuiteResult check_gradients(std::uint64_t seed, double tolerance, double* max_error) {
  Timer t;
  std::mt19937_64 rng(seed);

  NetConfig cfg;
  cfg.preset = "gradcheck";
  cfg.stages = {{4, 3, 2, true}, {5, 3, 3, false}};
  cfg.n_scales = 2;
  cfg.norm_window = 5;
  cfg.table_seed = seed;
  MultiscaleNet net(cfg, seed + 1);
  const auto image = random_volume(3, 12, 12, rng, 0.0, 1.0);
  const int n_classes = 3;
  LinearClassifier linear(cfg.feature_dims(), n_classes);
  linear.init_uniform(rng);
  std::vector<PixelSample> pixels;
  for (int i = 0; i < 6; ++i) pixels.push_back({0, uniform_int(rng, 0, 11), uniform_int(rng, 0, 11), i % n_classes});
  Stage1Objective stage1(net, linear, net.make_pyramid(image), pixels);
  const double e1 = grad_check(stage1);

  PurityClassifier purity(12, 5, 4);
  purity.init_uniform(rng);
  std::vector<ComponentExample> examples;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> x(12);
    for (double& v : x) v = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    std::vector<double> counts(4);
    for (double& c : counts) c = uniform_int(rng, 0, 3);
    counts[static_cast<std::size_t>(i)] += 1.0;
    examples.push_back({x, ClassDistribution::from_counts(counts)});
  }
  PurityObjective stage2(purity, examples);
  const double e2 = grad_check(stage2);

  const double worst = std::max(e1, e2);
  if (max_error) *max_error = worst;
  SuiteResult r;
  r.name = "finite-difference gradient checks";
  r.passed = worst < tolerance;
  r.seconds = t.seconds();
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << "feature net + pixel classifier " << e1 << ", purity classifier "
     << e2 << " (tolerance " << tolerance << ")";
  r.detail = os.str();
  return r;
}

bool run_selftest(std::ostream& out, std::uint64_t seed) {
  const std::vector<SuiteResult> results = {
      check_conv_kernels(seed, 100),    check_local_normalize(seed + 1, 40), check_mst(seed + 2, 100),
      check_pooling(seed + 3, 100),     check_cover(seed + 4, 200),          check_labeling(seed + 5, 100),
      check_metrics(seed + 6, 100),     check_gradients(seed + 7, 1e-4),
  };
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " [" << std::fixed << std::setprecision(2)
        << r.seconds << " s]\n";
    ok = ok && r.passed;
  }
  return ok;
}

}  // namespace sceneparse::reference
