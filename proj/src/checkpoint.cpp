#include "dragan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace dragan {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'A', 'G'};
constexpr size_t kLengthOffset = 8;

uint64_t fnv1a(const char* data, size_t n) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<uint8_t>(data[i]);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Writer {
 public:
  void bytes(const void* p, size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <typename U>
  void uint(U v) {
    for (size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void text(const std::string& s) {
    uint(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void floats(const Tensor<float>& t) {
    for (float v : t.data()) {
      uint32_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      uint(bits);
    }
  }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}
  uint64_t offset() const { return pos_; }

  void need(size_t n, const char* what) const {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(pos_, std::string("truncated while reading ") + what);
    }
  }
  template <typename U>
  U uint(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  std::string text(const char* what) {
    const auto n = uint<uint32_t>(what);
    need(n, what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor<float> floats(const Shape& shape, const char* what) {
    Tensor<float> t(shape);
    need(static_cast<size_t>(t.numel()) * 4, what);
    for (auto& v : t.data()) {
      const auto bits = uint<uint32_t>(what);
      std::memcpy(&v, &bits, sizeof v);
    }
    return t;
  }

 private:
  const std::string& data_;
  size_t pos_ = 0;
};

void write_opt(Writer& w, const OptimizerState<float>& s) {
  w.uint(s.step);
  for (const auto& m : s.m) w.floats(m);
  for (const auto& v : s.v) w.floats(v);
}

OptimizerState<float> read_opt(Reader& r, const ParameterList<float>& params) {
  OptimizerState<float> s;
  s.step = r.uint<uint64_t>("optimizer step");
  for (const auto& p : params) s.m.push_back(r.floats(p.var.shape(), "optimizer moments"));
  for (const auto& p : params) s.v.push_back(r.floats(p.var.shape(), "optimizer moments"));
  return s;
}

struct Header {
  TrainConfig config;
  size_t body_offset = 0;
};

// Checks magic, version, length and checksum, and parses the config.
Header read_header(const std::string& bytes, Reader& r) {
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError(0, "bad magic, not a checkpoint");
  r.uint<uint32_t>("magic");
  const auto version = r.uint<uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(4, "unsupported version " + std::to_string(version) + " (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto total = r.uint<uint64_t>("length");
  if (total != bytes.size()) {
    throw CheckpointError(kLengthOffset, "length mismatch: header expects " + std::to_string(total) +
                                             " bytes, file has " + std::to_string(bytes.size()));
  }
  if (total < 24) throw CheckpointError(kLengthOffset, "length too small");
  const size_t sum_at = bytes.size() - 8;
  uint64_t stored = 0;
  for (size_t i = 0; i < 8; ++i) stored |= static_cast<uint64_t>(static_cast<uint8_t>(bytes[sum_at + i])) << (8 * i);
  if (stored != fnv1a(bytes.data(), sum_at)) throw CheckpointError(sum_at, "checksum mismatch, file is corrupt");
  Header h;
  const uint64_t config_at = r.offset();
  try {
    h.config = TrainConfig::from_text(r.text("config"));
    h.config.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(config_at, std::string("bad config block: ") + e.what());
  }
  h.body_offset = r.offset();
  return h;
}

}  // namespace

std::string encode_checkpoint(const TrainState& state, const TrainConfig& config) {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint(kCheckpointVersion);
  w.uint(uint64_t{0});  // patched below
  w.text(config.to_text());
  const ParameterList<float> params = state.all_parameters();
  w.uint(static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    w.text(p.name);
    w.uint(static_cast<uint32_t>(p.var.shape().size()));
    for (int64_t d : p.var.shape()) w.uint(static_cast<uint64_t>(d));
  }
  for (const auto& p : params) w.floats(p.var.value());
  write_opt(w, state.generator_opt);
  for (const auto& o : state.critic_opts) write_opt(w, o);
  w.uint(static_cast<uint64_t>(state.iteration));
  w.uint(state.rng.seed());
  w.uint(state.rng.position());
  std::string& out = w.str();
  const uint64_t total = out.size() + 8;
  for (size_t i = 0; i < 8; ++i) out[kLengthOffset + i] = static_cast<char>((total >> (8 * i)) & 0xFF);
  w.uint(fnv1a(out.data(), out.size()));
  return out;
}

TrainConfig restore_checkpoint(const std::string& bytes, TrainState& state) {
  Reader r(bytes);
  const Header h = read_header(bytes, r);

  const ParameterList<float> params = state.all_parameters();
  const uint64_t census_at = r.offset();
  const auto count = r.uint<uint32_t>("census");
  if (count != params.size()) {
    throw CheckpointError(census_at, "census mismatch: file has " + std::to_string(count) + " parameters, model has " +
                                         std::to_string(params.size()));
  }
  for (const auto& p : params) {
    const uint64_t at = r.offset();
    const std::string name = r.text("census name");
    const auto rank = r.uint<uint32_t>("census rank");
    Shape shape;
    for (uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int64_t>(r.uint<uint64_t>("census dims")));
    if (name != p.name || shape != p.var.shape()) {
      throw CheckpointError(at, "census mismatch: file has " + name + " " + shape_str(shape) + ", model has " +
                                    p.name + " " + shape_str(p.var.shape()));
    }
  }

  std::vector<Tensor<float>> values;
  for (const auto& p : params) values.push_back(r.floats(p.var.shape(), "parameters"));
  OptimizerState<float> g_opt = read_opt(r, state.generator.parameters());
  std::vector<OptimizerState<float>> d_opts;
  for (const auto& c : state.critics.critics) d_opts.push_back(read_opt(r, c.parameters()));
  const auto iteration = static_cast<int64_t>(r.uint<uint64_t>("iteration"));
  const auto seed = r.uint<uint64_t>("rng seed");
  const auto position = r.uint<uint64_t>("rng position");
  if (r.offset() + 8 != bytes.size()) {
    throw CheckpointError(r.offset(), "unexpected trailing data (" + std::to_string(bytes.size() - r.offset() - 8) +
                                          " bytes)");
  }

  for (size_t i = 0; i < params.size(); ++i) params[i].var.assign(std::move(values[i]));
  state.generator_opt = std::move(g_opt);
  state.critic_opts = std::move(d_opts);
  state.iteration = iteration;
  state.rng = RngState(seed, position);
  return h.config;
}

LoadedCheckpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  const Header h = read_header(bytes, r);
  LoadedCheckpoint out{h.config, TrainState::create(h.config)};
  restore_checkpoint(bytes, out.state);
  return out;
}

void save_checkpoint(const TrainState& state, const TrainConfig& config, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(state, config);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace dragan
