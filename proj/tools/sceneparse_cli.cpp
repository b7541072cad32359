// Command-line front end: dataset generation, two-stage training, parsing,
// evaluation and the oracle self-test.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sceneparse/dataset.hpp"
#include "sceneparse/metrics.hpp"
#include "sceneparse/model_io.hpp"
#include "sceneparse/pipeline.hpp"
#include "sceneparse/png_io.hpp"
#include "sceneparse/reference.hpp"

namespace fs = std::filesystem;
using namespace sceneparse;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

// Options shared by the training subcommands.
struct TrainFlags {
  std::string preset = "toy";
  int scales = 3;
  int grid = 3;
  int min_component = kDefaultMinComponent;
  std::string sampling = "balanced";
  std::uint64_t seed = 1;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<double> weight_decay;
  std::string jitter = "off";
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// float32 .npy array of shape (C, H, W).
void write_npy(const fs::path& path, const FeatureVolume& v) {
  std::ostringstream header;
  header << "{'descr': '<f4', 'fortran_order': False, 'shape': (" << v.channels() << ", " << v.height() << ", "
         << v.width() << "), }";
  std::string h = header.str();
  const std::size_t unpadded = 10 + h.size() + 1;
  h.append((64 - unpadded % 64) % 64, ' ');
  h.push_back('\n');
  std::ofstream out(path, std::ios::binary);
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(h.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (double x : v.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
    const char b[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8), static_cast<char>(bits >> 16),
                       static_cast<char>(bits >> 24)};
    out.write(b, 4);
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<fs::path> collect_pngs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".png") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      out.push_back(p);
    } else {
      throw std::runtime_error("no such file or directory: " + in);
    }
  }
  return out;
}

void print_metrics(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  const auto m = metrics_from(cm);
  std::cout << std::fixed << std::setprecision(2);
  std::cout << "pixel/class accuracy: " << 100.0 * m.pixel_accuracy << "/" << 100.0 * m.class_accuracy << "\n";
  std::cout << "valid pixels: " << m.valid_pixels << "\n";
  for (int c = 0; c < cm.n_classes(); ++c) {
    const std::string name = c < static_cast<int>(names.size()) ? names[c] : std::to_string(c);
    std::cout << "  " << std::setw(12) << name << " recall ";
    if (std::isnan(m.per_class_recall[c])) {
      std::cout << "   n/a";
    } else {
      std::cout << std::setw(6) << 100.0 * m.per_class_recall[c];
    }
    std::cout << "  |";
    for (int p = 0; p < cm.n_classes(); ++p) std::cout << " " << cm.at(c, p);
    std::cout << "\n";
  }
}

int cmd_synth(const fs::path& out, const SynthOptions& options) {
  SynthReport report;
  const auto data = synth_generate(options, &report);
  save_dataset(data, out);
  for (const auto& s : report.shortfalls) {
    std::cerr << "note: image " << s.image << " placed " << s.placed << " of " << s.requested << " shapes\n";
  }
  std::cout << "wrote " << data.samples.size() << " images to " << out.string() << "\n";
  return 0;
}

int cmd_train_features(const fs::path& data_dir, const fs::path& out, const TrainFlags& f, int samples_per_image) {
  const auto data = load_dataset(data_dir);
  if (data.samples.empty()) throw std::runtime_error("no training images in " + data_dir.string());
  NetConfig cfg = NetConfig::from_preset(f.preset);
  cfg.n_scales = f.scales;
  cfg.table_seed = f.seed;
  MultiscaleNet net(cfg, f.seed);

  Stage1Options opt;
  opt.sampling = parse_sampling(f.sampling);
  opt.seed = f.seed;
  opt.jitter = f.jitter == "on";
  opt.samples_per_image = samples_per_image;
  if (f.epochs) opt.epochs = *f.epochs;
  if (f.lr) opt.lr = *f.lr;
  if (f.weight_decay) opt.weight_decay = *f.weight_decay;
  const auto t0 = std::chrono::steady_clock::now();
  opt.on_epoch = [&](int epoch, double loss) {
    std::cout << "epoch " << epoch + 1 << "/" << opt.epochs << " loss " << std::setprecision(6) << loss << " ("
              << std::setprecision(1) << std::fixed << seconds_since(t0) << " s)\n"
              << std::defaultfloat;
  };
  auto result = train_stage1(net, data, opt);

  ModelBundle bundle;
  bundle.net = cfg;
  bundle.banks = net.banks();
  bundle.class_names = data.class_names;
  bundle.grid = f.grid;
  bundle.min_component = f.min_component;
  bundle.init_seed = f.seed;
  bundle.pixel_classifier = std::move(result.pixel_classifier);
  save_model(bundle, out);
  std::cout << "saved stage-1 model to " << out.string() << "\n";
  return 0;
}

int cmd_train_classifier(const fs::path& model_in, const fs::path& data_dir, const fs::path& out, const TrainFlags& f,
                         std::optional<int> grid, std::optional<int> min_component, std::optional<int> hidden,
                         int batch, int per_image) {
  auto bundle = load_model(model_in);
  const auto data = load_dataset(data_dir);
  if (data.class_names != bundle.class_names) throw std::runtime_error("dataset classes differ from the model's");
  if (grid) bundle.grid = *grid;
  if (min_component) bundle.min_component = *min_component;

  const MultiscaleNet net(bundle.net, bundle.banks);
  const auto t0 = std::chrono::steady_clock::now();
  const auto examples =
      collect_component_examples(net, data, bundle.grid, bundle.min_component, {per_image, f.seed});
  std::cout << "collected " << examples.size() << " components (" << std::fixed << std::setprecision(1)
            << seconds_since(t0) << " s)\n"
            << std::defaultfloat;

  Stage2Options opt;
  opt.seed = f.seed;
  opt.hidden = hidden.value_or(bundle.net.preset == "paper" ? 512 : 32);
  opt.batch_size = batch;
  if (f.epochs) opt.epochs = *f.epochs;
  if (f.lr) opt.lr = *f.lr;
  if (f.weight_decay) opt.weight_decay = *f.weight_decay;
  opt.on_epoch = [&](int epoch, double loss) {
    std::cout << "epoch " << epoch + 1 << "/" << opt.epochs << " KL " << std::setprecision(6) << loss << "\n";
  };
  auto result = train_purity_classifier(examples, bundle.n_classes(), opt);
  bundle.purity = std::move(result.classifier);
  save_model(bundle, out);
  std::cout << "saved model to " << out.string() << "\n";
  return 0;
}

int cmd_parse(const fs::path& model_path, const std::vector<std::string>& inputs, const fs::path& out_dir,
              const std::string& mode_name, bool dump) {
  const SceneParser parser(load_model(model_path));
  const ParseMode mode = parse_mode(mode_name);
  const auto files = collect_pngs(inputs);
  if (files.empty()) throw std::runtime_error("no input images");
  fs::create_directories(out_dir);

  std::vector<double> times(files.size());
  std::vector<std::string> errors(files.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      const auto image = read_rgb_png(files[i]);
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = parser.parse(image, mode);
      times[i] = seconds_since(t0);
      const std::string stem = files[i].stem().string();
      write_palette_png(out_dir / (stem + "_labels.png"), result.labels);
      write_label_png(out_dir / (stem + "_index.png"), result.labels);
      if (dump) write_npy(out_dir / (stem + "_dist.npy"), result.distributions);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  int failed = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!errors[i].empty()) {
      std::cerr << files[i].string() << ": " << errors[i] << "\n";
      ++failed;
      continue;
    }
    std::cout << files[i].filename().string() << ": " << std::fixed << std::setprecision(3) << times[i] << " s\n";
  }
  return failed ? kRuntimeFailure : 0;
}

int cmd_eval(const fs::path& pred_dir, const fs::path& truth_dir, std::optional<int> classes) {
  std::vector<std::string> names;
  for (const auto& candidate : {truth_dir / "classes.txt", truth_dir.parent_path() / "classes.txt"}) {
    std::ifstream in(candidate);
    if (!in) continue;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) names.push_back(line);
    }
    break;
  }
  fs::path labels_dir = fs::is_directory(truth_dir / "labels") ? truth_dir / "labels" : truth_dir;
  const auto truth_files = collect_pngs({labels_dir.string()});
  if (truth_files.empty()) throw std::runtime_error("no ground-truth label maps in " + labels_dir.string());

  std::vector<std::pair<LabelMap, LabelMap>> pairs;
  int max_label = 0;
  for (const auto& tf : truth_files) {
    const std::string stem = tf.stem().string();
    fs::path pf = pred_dir / (stem + "_index.png");
    if (!fs::exists(pf)) pf = pred_dir / (stem + ".png");
    if (!fs::exists(pf)) throw std::runtime_error("no prediction for " + stem + " in " + pred_dir.string());
    auto truth = read_label_png(tf);
    auto pred = read_label_png(pf);
    for (auto v : truth.data()) {
      if (v != LabelMap::kVoid) max_label = std::max<int>(max_label, v);
    }
    for (auto v : pred.data()) max_label = std::max<int>(max_label, v);
    pairs.emplace_back(std::move(pred), std::move(truth));
  }
  const int n = classes.value_or(names.empty() ? max_label + 1 : static_cast<int>(names.size()));
  ConfusionMatrix cm(n);
  for (const auto& [pred, truth] : pairs) cm.add(pred, truth);
  std::cout << "images: " << pairs.size() << "\n";
  print_metrics(cm, names);
  return 0;
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--epochs", f.epochs, "Training epochs");
  app->add_option("--lr", f.lr, "SGD learning rate")->check(CLI::NonNegativeNumber);
  app->add_option("--weight-decay", f.weight_decay, "L2 weight decay (biases exempt)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene parsing with multiscale convolutional features and purity trees"};
  app.require_subcommand(1);

  // synth-gen
  SynthOptions synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth-gen", "Generate a synthetic shapes dataset");
  synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of images")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--height", synth.height, "Image height")->check(CLI::Range(8, 4096));
  synth_cmd->add_option("--width", synth.width, "Image width")->check(CLI::Range(8, 4096));
  synth_cmd->add_option("--classes", synth.n_classes, "Class count including background")->check(CLI::Range(2, 255));
  synth_cmd->add_option("--split", synth.split, "Split tag used in image names");

  // train-features
  TrainFlags tf;
  std::string tf_data;
  std::string tf_out;
  int samples_per_image = Stage1Options{}.samples_per_image;
  auto* tf_cmd = app.add_subcommand("train-features", "Stage 1: train the multiscale feature extractor");
  tf_cmd->add_option("--data", tf_data, "Training dataset directory")->required()->check(CLI::ExistingDirectory);
  tf_cmd->add_option("--out", tf_out, "Output model file")->required();
  tf_cmd->add_option("--preset", tf.preset, "Network preset")->check(CLI::IsMember({"toy", "paper"}));
  tf_cmd->add_option("--scales", tf.scales, "Pyramid scales")->check(CLI::Range(1, 8));
  tf_cmd->add_option("--grid", tf.grid, "Descriptor grid size G")->check(CLI::Range(1, 16));
  tf_cmd->add_option("--min-component", tf.min_component, "Smallest kept tree component (pixels)")
      ->check(CLI::NonNegativeNumber);
  tf_cmd->add_option("--sampling", tf.sampling, "Pixel sampling")->check(CLI::IsMember({"natural", "balanced"}));
  tf_cmd->add_option("--jitter", tf.jitter, "Flip/rotation augmentation")->check(CLI::IsMember({"on", "off"}));
  tf_cmd->add_option("--samples-per-image", samples_per_image, "Training pixels per image per epoch")
      ->check(CLI::PositiveNumber);
  add_train_flags(tf_cmd, tf);

  // train-classifier
  TrainFlags tc;
  std::string tc_model;
  std::string tc_data;
  std::string tc_out;
  std::optional<int> tc_grid;
  std::optional<int> tc_min;
  std::optional<int> tc_hidden;
  int tc_batch = Stage2Options{}.batch_size;
  int tc_per_image = ComponentSampling{}.per_image;
  auto* tc_cmd = app.add_subcommand("train-classifier", "Stage 2: train the component purity classifier");
  tc_cmd->add_option("--model", tc_model, "Stage-1 model file")->required();
  tc_cmd->add_option("--data", tc_data, "Training dataset directory")->required()->check(CLI::ExistingDirectory);
  tc_cmd->add_option("--out", tc_out, "Output model file")->required();
  tc_cmd->add_option("--grid", tc_grid, "Descriptor grid size G (default: the model's)")->check(CLI::Range(1, 16));
  tc_cmd->add_option("--min-component", tc_min, "Smallest kept tree component (default: the model's)")
      ->check(CLI::NonNegativeNumber);
  tc_cmd->add_option("--hidden", tc_hidden, "Hidden units (default 32 for toy, 512 for paper)")
      ->check(CLI::PositiveNumber);
  tc_cmd->add_option("--batch-size", tc_batch, "Minibatch size")->check(CLI::PositiveNumber);
  tc_cmd->add_option("--components-per-image", tc_per_image, "Training components sampled per image (0 = all)")
      ->check(CLI::NonNegativeNumber);
  add_train_flags(tc_cmd, tc);

  // parse
  std::string parse_model;
  std::vector<std::string> parse_inputs;
  std::string parse_out = ".";
  std::string parse_mode_name = "cover";
  bool parse_dump = false;
  auto* parse_cmd = app.add_subcommand("parse", "Label images with a trained model");
  parse_cmd->add_option("--model", parse_model, "Model file")->required();
  parse_cmd->add_option("--out", parse_out, "Output directory");
  parse_cmd->add_option("--mode", parse_mode_name, "cover or baseline")->check(CLI::IsMember({"cover", "baseline"}));
  parse_cmd->add_flag("--dump-distributions", parse_dump, "Also write <name>_dist.npy (classes x H x W)");
  parse_cmd->add_option("inputs", parse_inputs, "PNG images or directories")->required();

  // eval
  std::string eval_pred;
  std::string eval_truth;
  std::optional<int> eval_classes;
  auto* eval_cmd = app.add_subcommand("eval", "Pixel and class accuracy of predicted label maps");
  eval_cmd->add_option("--pred", eval_pred, "Directory of predictions (<name>_index.png or <name>.png)")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--truth", eval_truth, "Dataset root or directory of ground-truth label PNGs")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--classes", eval_classes, "Class count (default: classes.txt or max label + 1)")
      ->check(CLI::Range(1, 255));

  // gradcheck / selftest
  std::uint64_t check_seed = 1;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks of all trainable stages");
  grad_cmd->add_option("--seed", check_seed, "Random seed");
  auto* self_cmd = app.add_subcommand("selftest", "Run every oracle suite");
  self_cmd->add_option("--seed", check_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth_out, synth);
    if (*tf_cmd) return cmd_train_features(tf_data, tf_out, tf, samples_per_image);
    if (*tc_cmd) {
      return cmd_train_classifier(tc_model, tc_data, tc_out, tc, tc_grid, tc_min, tc_hidden, tc_batch, tc_per_image);
    }
    if (*parse_cmd) return cmd_parse(parse_model, parse_inputs, parse_out, parse_mode_name, parse_dump);
    if (*eval_cmd) return cmd_eval(eval_pred, eval_truth, eval_classes);
    if (*grad_cmd) {
      const auto r = reference::check_gradients(check_seed, 1e-4);
      std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
      return r.passed ? 0 : kRuntimeFailure;
    }
    if (*self_cmd) return reference::run_selftest(std::cout, check_seed) ? 0 : kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}
