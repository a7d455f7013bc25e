#include "edi/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace edi {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  template <typename T>
  T get(const char* field) {
    T value;
    get_bytes(&value, sizeof(T), field);
    return value;
  }
  void get_bytes(void* dst, std::size_t n, const char* field) {
    if (n > in_.size() - pos_)
      throw FormatError(std::string("truncated input while reading ") + field);
    std::memcpy(dst, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

void check_magic(Reader& r, const char (&magic)[5]) {
  char got[4];
  r.get_bytes(got, 4, "magic");
  if (std::memcmp(got, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + magic);
}

std::uint16_t narrow16(int v, const char* field) {
  if (v < 0 || v > std::numeric_limits<std::uint16_t>::max())
    throw FormatError(std::string("value does not fit sparse format field ") + field);
  return static_cast<std::uint16_t>(v);
}

std::uint8_t narrow8(int v, const char* field) {
  if (v < 0 || v > std::numeric_limits<std::uint8_t>::max())
    throw FormatError(std::string("value does not fit sparse format field ") + field);
  return static_cast<std::uint8_t>(v);
}

LayerKind kind_from(std::uint32_t v) {
  if (v > static_cast<std::uint32_t>(LayerKind::activation)) throw FormatError("unknown layer kind");
  return static_cast<LayerKind>(v);
}

Activation activation_from(std::uint32_t v) {
  if (v > static_cast<std::uint32_t>(Activation::relu)) throw FormatError("unknown activation");
  return static_cast<Activation>(v);
}

void size_arrays(NetworkGenome& g) {
  const std::size_t n = g.layers.size();
  g.weights.weights.resize(n);
  g.weights.biases.resize(n);
  g.masks.bits.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.weights.weights[i].assign(g.layers[i].weight_count(), 0.0);
    g.weights.biases[i].assign(g.layers[i].bias_count(), 0.0);
    g.masks.bits[i].assign(g.layers[i].weight_count(), 0);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_genome(const NetworkGenome& genome) {
  genome.validate();
  Writer w;
  w.put_bytes("EDGN", 4);
  w.put<std::uint32_t>(kGenomeFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(genome.generation));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(genome.lineage_id.size()));
  w.put_bytes(genome.lineage_id.data(), genome.lineage_id.size());
  w.put<std::uint32_t>(genome.input.channels);
  w.put<std::uint32_t>(genome.input.height);
  w.put<std::uint32_t>(genome.input.width);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(genome.layers.size()));
  for (const auto& s : genome.layers) {
    for (std::uint32_t v :
         {static_cast<std::uint32_t>(s.kind), static_cast<std::uint32_t>(s.activation),
          std::uint32_t(s.out_channels), std::uint32_t(s.in_channels), std::uint32_t(s.kernel_h),
          std::uint32_t(s.kernel_w), std::uint32_t(s.stride), std::uint32_t(s.padding),
          std::uint32_t(s.out_dim), std::uint32_t(s.in_dim), std::uint32_t(s.window)})
      w.put(v);
  }
  for (std::size_t i = 0; i < genome.layers.size(); ++i) {
    if (!genome.layers[i].has_weights()) continue;
    const auto& wt = genome.weights.weights[i];
    const auto& b = genome.weights.biases[i];
    const auto& m = genome.masks.bits[i];
    w.put_bytes(wt.data(), wt.size() * sizeof(double));
    w.put_bytes(b.data(), b.size() * sizeof(double));
    w.put_bytes(m.data(), m.size());
  }
  return w.take();
}

NetworkGenome decode_genome(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  check_magic(r, "EDGN");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kGenomeFormatVersion)
    throw FormatError("unsupported genome format version " + std::to_string(version));
  NetworkGenome g;
  g.generation = static_cast<int>(r.get<std::uint32_t>("generation"));
  const auto id_len = r.get<std::uint32_t>("lineage id length");
  g.lineage_id.resize(id_len);
  r.get_bytes(g.lineage_id.data(), id_len, "lineage id");
  g.input.channels = static_cast<int>(r.get<std::uint32_t>("input channels"));
  g.input.height = static_cast<int>(r.get<std::uint32_t>("input height"));
  g.input.width = static_cast<int>(r.get<std::uint32_t>("input width"));
  const auto layer_count = r.get<std::uint32_t>("layer count");
  if (layer_count > 4096) throw FormatError("implausible layer count");
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerSpec s;
    s.kind = kind_from(r.get<std::uint32_t>("layer kind"));
    s.activation = activation_from(r.get<std::uint32_t>("activation"));
    s.out_channels = static_cast<int>(r.get<std::uint32_t>("out_channels"));
    s.in_channels = static_cast<int>(r.get<std::uint32_t>("in_channels"));
    s.kernel_h = static_cast<int>(r.get<std::uint32_t>("kernel_h"));
    s.kernel_w = static_cast<int>(r.get<std::uint32_t>("kernel_w"));
    s.stride = static_cast<int>(r.get<std::uint32_t>("stride"));
    s.padding = static_cast<int>(r.get<std::uint32_t>("padding"));
    s.out_dim = static_cast<int>(r.get<std::uint32_t>("out_dim"));
    s.in_dim = static_cast<int>(r.get<std::uint32_t>("in_dim"));
    s.window = static_cast<int>(r.get<std::uint32_t>("window"));
    g.layers.push_back(s);
  }
  try {
    infer_shapes(g.input, g.layers);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent architecture: ") + e.what());
  }
  size_arrays(g);
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    if (!g.layers[i].has_weights()) continue;
    auto& wt = g.weights.weights[i];
    auto& b = g.weights.biases[i];
    auto& m = g.masks.bits[i];
    r.get_bytes(wt.data(), wt.size() * sizeof(double), "weights");
    r.get_bytes(b.data(), b.size() * sizeof(double), "biases");
    r.get_bytes(m.data(), m.size(), "mask");
  }
  if (!r.done()) throw FormatError("trailing bytes after genome");
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return g;
}

std::size_t sparse_encoded_size(const NetworkGenome& genome) {
  std::size_t bytes = kSparseHeaderBytes + kSparseLayerDescriptorBytes * genome.layers.size();
  for (std::size_t i = 0; i < genome.layers.size(); ++i) {
    const auto& spec = genome.layers[i];
    if (!spec.has_weights()) continue;
    bytes += sizeof(std::uint32_t) + kSparseEntryBytes * live_synapse_count(genome, i) +
             sizeof(float) * spec.bias_count();
  }
  return bytes;
}

std::vector<std::uint8_t> encode_sparse(const NetworkGenome& genome) {
  genome.validate();
  Writer w;
  w.put_bytes("EDSP", 4);
  w.put<std::uint16_t>(kSparseFormatVersion);
  w.put<std::uint16_t>(narrow16(static_cast<int>(genome.layers.size()), "layer_count"));
  w.put<std::uint16_t>(narrow16(genome.input.channels, "input"));
  w.put<std::uint16_t>(narrow16(genome.input.height, "input"));
  w.put<std::uint16_t>(narrow16(genome.input.width, "input"));
  for (const auto& s : genome.layers) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.kind));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.activation));
    w.put<std::uint8_t>(narrow8(s.stride, "stride"));
    w.put<std::uint8_t>(narrow8(s.padding, "padding"));
    int d[4] = {0, 0, 0, 0};
    if (s.kind == LayerKind::conv2d) {
      d[0] = s.out_channels; d[1] = s.in_channels; d[2] = s.kernel_h; d[3] = s.kernel_w;
    } else if (s.kind == LayerKind::dense) {
      d[0] = s.out_dim; d[1] = s.in_dim;
    } else if (s.kind == LayerKind::avgpool2d) {
      d[0] = s.window;
    }
    for (int v : d) w.put<std::uint16_t>(narrow16(v, "layer dimension"));
  }
  for (std::size_t i = 0; i < genome.layers.size(); ++i) {
    if (!genome.layers[i].has_weights()) continue;
    const auto& wt = genome.weights.weights[i];
    const auto& m = genome.masks.bits[i];
    w.put<std::uint32_t>(static_cast<std::uint32_t>(live_synapse_count(genome, i)));
    for (std::size_t j = 0; j < wt.size(); ++j) {
      if (!m[j]) continue;
      w.put<std::uint32_t>(static_cast<std::uint32_t>(j));
      w.put<float>(static_cast<float>(wt[j]));
    }
    for (double b : genome.weights.biases[i]) w.put<float>(static_cast<float>(b));
  }
  return w.take();
}

NetworkGenome decode_sparse(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  check_magic(r, "EDSP");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kSparseFormatVersion)
    throw FormatError("unsupported sparse format version " + std::to_string(version));
  NetworkGenome g;
  const auto layer_count = r.get<std::uint16_t>("layer count");
  g.input.channels = r.get<std::uint16_t>("input channels");
  g.input.height = r.get<std::uint16_t>("input height");
  g.input.width = r.get<std::uint16_t>("input width");
  for (std::uint16_t i = 0; i < layer_count; ++i) {
    LayerSpec s;
    s.kind = kind_from(r.get<std::uint8_t>("layer kind"));
    s.activation = activation_from(r.get<std::uint8_t>("activation"));
    s.stride = r.get<std::uint8_t>("stride");
    s.padding = r.get<std::uint8_t>("padding");
    int d[4];
    for (int& v : d) v = r.get<std::uint16_t>("layer dimension");
    if (s.kind == LayerKind::conv2d) {
      s.out_channels = d[0]; s.in_channels = d[1]; s.kernel_h = d[2]; s.kernel_w = d[3];
    } else if (s.kind == LayerKind::dense) {
      s.out_dim = d[0]; s.in_dim = d[1];
    } else if (s.kind == LayerKind::avgpool2d) {
      s.window = d[0];
    }
    g.layers.push_back(s);
  }
  try {
    infer_shapes(g.input, g.layers);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent architecture: ") + e.what());
  }
  size_arrays(g);
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    if (!g.layers[i].has_weights()) continue;
    auto& wt = g.weights.weights[i];
    auto& m = g.masks.bits[i];
    const auto live = r.get<std::uint32_t>("live count");
    if (live > wt.size()) throw FormatError("live count exceeds layer size");
    std::int64_t previous = -1;
    for (std::uint32_t k = 0; k < live; ++k) {
      const auto j = r.get<std::uint32_t>("synapse index");
      const auto v = r.get<float>("synapse weight");
      if (j >= wt.size() || static_cast<std::int64_t>(j) <= previous)
        throw FormatError("synapse indices out of range or not increasing");
      previous = j;
      wt[j] = v;
      m[j] = 1;
    }
    for (auto& b : g.weights.biases[i]) b = r.get<float>("bias");
  }
  if (!r.done()) throw FormatError("trailing bytes after sparse genome");
  return g;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_genome(const NetworkGenome& genome, const std::filesystem::path& path) {
  write_bytes(path, encode_genome(genome));
}

NetworkGenome load_genome(const std::filesystem::path& path) {
  return decode_genome(read_bytes(path));
}

}  // namespace edi
