#include "sceneparse/model_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace sceneparse {
namespace {

using json = nlohmann::json;
using Kind = ModelFormatError::Kind;

constexpr char kMagic[4] = {'S', 'C', 'V', 'R'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void tensor(const std::vector<std::uint32_t>& dims, const std::vector<double>& values) {
    std::size_t count = 1;
    for (auto d : dims) count *= d;
    if (count != values.size()) throw std::logic_error("encode_model: tensor shape does not match its data");
    u32(static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) u32(d);
    for (double v : values) u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw ModelFormatError(Kind::malformed, "model file: unexpected end of payload");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> tensor(const std::vector<std::uint32_t>& expected, const std::string& what) {
    const std::uint32_t rank = u32();
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = u32();
    if (dims != expected) throw ModelFormatError(Kind::malformed, "model file: unexpected shape for " + what);
    std::size_t count = 1;
    for (auto d : dims) count *= d;
    need(count * 4);
    std::vector<double> values(count);
    for (auto& v : values) v = static_cast<double>(std::bit_cast<float>(u32()));
    return values;
  }
  bool done() const { return pos_ == size_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

json config_json(const ModelBundle& b) {
  json stages = json::array();
  for (const auto& s : b.net.stages) {
    stages.push_back({{"out_channels", s.out_channels}, {"kernel_size", s.kernel_size}, {"fan_in", s.fan_in},
                      {"pool", s.pool}});
  }
  json tables = json::array();
  for (const auto& bank : b.banks) {
    json pairs = json::array();
    for (const auto& c : bank.connections()) pairs.push_back({c.out, c.in});
    tables.push_back(std::move(pairs));
  }
  json j;
  j["net"] = {{"preset", b.net.preset},         {"in_channels", b.net.in_channels},
              {"stages", std::move(stages)},    {"n_scales", b.net.n_scales},
              {"norm_window", b.net.norm_window}, {"table_seed", b.net.table_seed}};
  j["connection_tables"] = std::move(tables);
  j["class_names"] = b.class_names;
  j["grid"] = b.grid;
  j["min_component"] = b.min_component;
  j["init_seed"] = b.init_seed;
  j["has_pixel_classifier"] = b.pixel_classifier.has_value();
  j["purity_hidden"] = b.purity ? b.purity->hidden() : 0;
  return j;
}

std::uint32_t dim(int v) { return static_cast<std::uint32_t>(v); }

}  // namespace

std::vector<std::uint8_t> encode_model(const ModelBundle& b) {
  b.net.validate();
  if (b.banks.size() != b.net.stages.size()) throw std::invalid_argument("save_model: bank count does not match the config");

  Writer w;
  w.bytes(kMagic, 4);
  w.u32(b.version);
  const std::string config = config_json(b).dump();
  w.u64(config.size());
  w.bytes(config.data(), config.size());

  std::uint32_t n_tensors = 2 * static_cast<std::uint32_t>(b.banks.size());
  if (b.pixel_classifier) n_tensors += 1;
  if (b.purity) n_tensors += 3;
  w.u32(n_tensors);
  for (const auto& bank : b.banks) {
    w.tensor({dim(static_cast<int>(bank.connections().size())), dim(bank.kernel_size()), dim(bank.kernel_size())},
             bank.weights());
    w.tensor({dim(bank.out_channels())}, bank.biases());
  }
  if (b.pixel_classifier) {
    const auto& lc = *b.pixel_classifier;
    w.tensor({dim(lc.n_classes()), dim(lc.input_dims())}, lc.weights());
  }
  if (b.purity) {
    const auto& p = *b.purity;
    w.tensor({dim(p.hidden()), dim(p.input_dims())}, p.w1());
    w.tensor({dim(p.hidden())}, p.b1());
    w.tensor({dim(p.n_classes()), dim(p.hidden())}, p.w2());
  }
  w.u32(crc_of(w.data().data(), w.data().size()));
  return std::move(w.data());
}

ModelBundle decode_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ModelFormatError(Kind::bad_magic, "model file: bad magic (not an SCVR model)");
  }
  if (bytes.size() < 12) throw ModelFormatError(Kind::checksum, "model file: checksum failure (file truncated)");
  Reader head(bytes.data() + 4, 4);
  const std::uint32_t version = head.u32();
  if (version != kModelFormatVersion) {
    throw ModelFormatError(Kind::version_mismatch, "model file: version " + std::to_string(version) +
                                                       ", this build reads version " +
                                                       std::to_string(kModelFormatVersion));
  }
  const std::size_t payload = bytes.size() - 4;
  Reader tail(bytes.data() + payload, 4);
  if (tail.u32() != crc_of(bytes.data(), payload)) {
    throw ModelFormatError(Kind::checksum, "model file: checksum failure (corrupt or truncated)");
  }

  Reader r(bytes.data() + 8, payload - 8);
  ModelBundle b;
  b.version = version;
  json j;
  bool has_linear = false;
  int hidden = 0;
  std::vector<std::vector<Connection>> tables;
  try {
    j = json::parse(r.text(r.u64()));
    const auto& net = j.at("net");
    b.net.preset = net.at("preset").get<std::string>();
    b.net.in_channels = net.at("in_channels").get<int>();
    b.net.n_scales = net.at("n_scales").get<int>();
    b.net.norm_window = net.at("norm_window").get<int>();
    b.net.table_seed = net.at("table_seed").get<std::uint64_t>();
    for (const auto& s : net.at("stages")) {
      b.net.stages.push_back({s.at("out_channels").get<int>(), s.at("kernel_size").get<int>(),
                              s.at("fan_in").get<int>(), s.at("pool").get<bool>()});
    }
    b.class_names = j.at("class_names").get<std::vector<std::string>>();
    b.grid = j.at("grid").get<int>();
    b.min_component = j.at("min_component").get<int>();
    b.init_seed = j.at("init_seed").get<std::uint64_t>();
    has_linear = j.at("has_pixel_classifier").get<bool>();
    hidden = j.at("purity_hidden").get<int>();
    for (const auto& pairs : j.at("connection_tables")) {
      auto& conns = tables.emplace_back();
      for (const auto& pair : pairs) conns.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(Kind::malformed, std::string("model file: bad config block: ") + e.what());
  }
  try {
    b.net.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(Kind::malformed, std::string("model file: ") + e.what());
  }

  if (tables.size() != b.net.stages.size()) throw ModelFormatError(Kind::malformed, "model file: table count mismatch");
  const std::uint32_t n_tensors = r.u32();
  const std::uint32_t expected = 2 * static_cast<std::uint32_t>(b.net.stages.size()) + (has_linear ? 1 : 0) +
                                 (hidden > 0 ? 3 : 0);
  if (n_tensors != expected) throw ModelFormatError(Kind::malformed, "model file: unexpected tensor count");

  int in = b.net.in_channels;
  for (std::size_t s = 0; s < b.net.stages.size(); ++s) {
    const auto& spec = b.net.stages[s];
    FilterBank bank;
    try {
      bank = FilterBank(in, spec.out_channels, spec.kernel_size, std::move(tables[s]));
    } catch (const std::invalid_argument& e) {
      throw ModelFormatError(Kind::malformed, std::string("model file: ") + e.what());
    }
    const std::string name = "bank " + std::to_string(s);
    bank.weights() = r.tensor({dim(static_cast<int>(bank.connections().size())), dim(spec.kernel_size),
                               dim(spec.kernel_size)},
                              name + " weights");
    bank.biases() = r.tensor({dim(spec.out_channels)}, name + " biases");
    b.banks.push_back(std::move(bank));
    in = spec.out_channels;
  }
  const int n_classes = b.n_classes();
  if (has_linear) {
    LinearClassifier lc(b.net.feature_dims(), n_classes);
    lc.weights() = r.tensor({dim(n_classes), dim(b.net.feature_dims())}, "pixel classifier");
    b.pixel_classifier = std::move(lc);
  }
  if (hidden > 0) {
    PurityClassifier p(b.descriptor_dims(), hidden, n_classes);
    p.w1() = r.tensor({dim(hidden), dim(b.descriptor_dims())}, "purity w1");
    p.b1() = r.tensor({dim(hidden)}, "purity b1");
    p.w2() = r.tensor({dim(n_classes), dim(hidden)}, "purity w2");
    b.purity = std::move(p);
  }
  if (!r.done()) throw ModelFormatError(Kind::malformed, "model file: trailing bytes after the last tensor");
  return b;
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = encode_model(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write model " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

void round_to_storage(ModelBundle& bundle) {
  const auto round = [](std::vector<double>& v) {
    for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
  };
  for (auto& bank : bundle.banks) {
    round(bank.weights());
    round(bank.biases());
  }
  if (bundle.pixel_classifier) round(bundle.pixel_classifier->weights());
  if (bundle.purity) {
    round(bundle.purity->w1());
    round(bundle.purity->b1());
    round(bundle.purity->w2());
  }
}

}  // namespace sceneparse
