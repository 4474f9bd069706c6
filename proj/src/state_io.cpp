#include "seed/state_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "seed/error.hpp"

namespace seed {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'E', 'D', 'C', 'L', 'S', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { le(v, 4); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v), 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::vector<unsigned char>& buffer() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& in, std::size_t end) : in_(in), end_(end) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(std::span<double> out) {
    for (double& v : out) v = f64();
  }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > end_ - pos_) corrupt("string length");
    const unsigned char* p = take(static_cast<std::size_t>(n));
    return {reinterpret_cast<const char*>(p), static_cast<std::size_t>(n)};
  }
  std::size_t count(std::size_t max_reasonable) {
    const std::uint32_t n = u32();
    if (n > max_reasonable) corrupt("count out of range");
    return n;
  }
  bool done() const { return pos_ == end_; }

  [[noreturn]] static void corrupt(const std::string& what) { throw Error(ErrorKind::CorruptState, what); }

 private:
  const unsigned char* take(std::size_t n) {
    if (n > end_ - pos_) corrupt("truncated state file");
    const unsigned char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t le(int n) {
    const unsigned char* p = take(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return v;
  }
  const std::vector<unsigned char>& in_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv(const unsigned char* p, std::size_t n) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

void write_mlp(Writer& w, const Mlp& net) {
  w.u32(static_cast<std::uint32_t>(net.input_dim()));
  w.u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u8(static_cast<std::uint8_t>(l.act));
    w.f64s(l.weight);
    w.f64s(l.bias);
  }
}

Mlp read_mlp(Reader& r) {
  constexpr std::size_t kMaxWidth = 1u << 20;
  const std::size_t input_dim = r.count(kMaxWidth);
  const std::size_t layers = r.count(1024);
  if (layers == 0) {
    Rng unused;
    return Mlp::build(input_dim, {}, Activation::Identity, Activation::Identity, unused);
  }
  std::vector<DenseLayer> out;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t in = r.count(kMaxWidth);
    const std::size_t o = r.count(kMaxWidth);
    const std::uint8_t act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::Tanh)) Reader::corrupt("activation tag");
    DenseLayer l(in, o, static_cast<Activation>(act));
    r.f64s(l.weight);
    r.f64s(l.bias);
    out.push_back(std::move(l));
  }
  try {
    Mlp net(std::move(out));
    if (net.input_dim() != input_dim) Reader::corrupt("network input width");
    return net;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptState) throw;
    Reader::corrupt("layer shapes do not chain");
  }
}

void write_rng(Writer& w, const Rng& rng) {
  const auto snap = rng.snapshot();
  for (auto word : snap.s) w.u64(word);
  w.u8(snap.has_spare ? 1 : 0);
  w.f64(snap.spare);
}

Rng read_rng(Reader& r) {
  Rng::Snapshot snap;
  for (auto& word : snap.s) word = r.u64();
  snap.has_spare = r.u8() != 0;
  snap.spare = r.f64();
  Rng rng;
  rng.restore(snap);
  return rng;
}

void write_ints(Writer& w, std::span<const int> v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (int x : v) w.i32(x);
}

std::vector<int> read_ints(Reader& r) {
  std::vector<int> v(r.count(1u << 24));
  for (int& x : v) x = r.i32();
  return v;
}

void write_sizes(Writer& w, std::span<const std::size_t> v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (auto x : v) w.u32(static_cast<std::uint32_t>(x));
}

std::vector<std::size_t> read_sizes(Reader& r) {
  std::vector<std::size_t> v(r.count(1024));
  for (auto& x : v) x = r.u32();
  return v;
}

void write_bank(Writer& w, const ClassBank& bank, RepresentationMode fallback) {
  w.u32(static_cast<std::uint32_t>(bank.size()));
  w.u8(static_cast<std::uint8_t>(bank.empty() ? fallback : bank.entries().begin()->second.mode()));
  for (const auto& [id, g] : bank.entries()) {
    w.i32(id);
    w.u32(static_cast<std::uint32_t>(g.dim()));
    w.f64s(g.mean());
    if (!g.has_covariance()) continue;
    for (std::size_t r = 0; r < g.dim(); ++r)
      for (std::size_t c = 0; c <= r; ++c) w.f64(g.cov()(r, c));
  }
}

ClassBank read_bank(Reader& r) {
  const std::size_t n = r.count(1u << 24);
  const std::uint8_t mode_tag = r.u8();
  if (mode_tag > static_cast<std::uint8_t>(RepresentationMode::Prototype)) Reader::corrupt("representation tag");
  const auto mode = static_cast<RepresentationMode>(mode_tag);
  ClassBank bank;
  for (std::size_t i = 0; i < n; ++i) {
    const int id = r.i32();
    const std::size_t s = r.count(4096);
    Vec mean(s);
    r.f64s(mean);
    Matrix cov(s, s);
    if (mode != RepresentationMode::Prototype)
      for (std::size_t row = 0; row < s; ++row)
        for (std::size_t c = 0; c <= row; ++c) cov(row, c) = cov(c, row) = r.f64();
    try {
      bank.set(id, ClassGaussian::from_moments(std::move(mean), cov, mode));
    } catch (const Error& e) {
      Reader::corrupt(std::string("class ") + std::to_string(id) + ": " + e.what());
    }
  }
  return bank;
}

}  // namespace

std::vector<unsigned char> encode_state(const RunStateFile& file) {
  const EnsembleState& s = file.state;
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kStateVersion);
  w.str(file.config_json);

  w.u64(s.net.input_dim);
  write_sizes(w, s.net.trunk_layers);
  write_sizes(w, s.net.head_layers);
  w.u64(s.net.embed_dim);
  w.u8(static_cast<std::uint8_t>(s.net.activation));
  w.u8(s.net.final_relu ? 1 : 0);
  w.u64(s.net.rng_seed);

  write_rng(w, s.init_rng);
  write_rng(w, s.shuffle_rng);
  write_rng(w, s.strategy_rng);
  w.i32(s.tasks_completed);
  w.u32(static_cast<std::uint32_t>(s.task_classes.size()));
  for (const auto& cs : s.task_classes) write_ints(w, cs);

  w.u8(s.trunk.frozen ? 1 : 0);
  write_mlp(w, s.trunk.net);
  w.u32(static_cast<std::uint32_t>(s.heads.size()));
  for (const auto& h : s.heads) {
    w.i32(h.index);
    w.u8(h.trained ? 1 : 0);
    write_mlp(w, h.net);
  }
  for (const auto& b : s.banks) write_bank(w, b, RepresentationMode::FullCovariance);

  w.u32(static_cast<std::uint32_t>(s.logs.size()));
  for (const auto& log : s.logs) {
    w.i32(log.task);
    write_ints(w, log.classes);
    w.u8(log.selection ? 1 : 0);
    write_ints(w, log.trained);
    w.u32(static_cast<std::uint32_t>(log.overlap.size()));
    w.f64s(log.overlap);
    w.f64(log.final_loss);
    w.f64(log.final_ce);
    w.f64(log.final_kd);
    w.f64(log.wall_seconds);
  }
  auto& buf = w.buffer();
  const std::uint64_t sum = fnv(buf.data(), buf.size());
  w.u64(sum);
  return std::move(buf);
}

RunStateFile decode_state(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < sizeof kMagic + 4 + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    Reader::corrupt("not a run-state file");
  {
    Reader head(bytes, bytes.size());
    for (std::size_t i = 0; i < sizeof kMagic; ++i) head.u8();
    const std::uint32_t version = head.u32();
    if (version != kStateVersion)
      throw Error(ErrorKind::VersionMismatch,
                  "state version " + std::to_string(version) + ", expected " + std::to_string(kStateVersion));
  }
  const std::size_t body = bytes.size() - 8;
  {
    Reader tail(bytes, bytes.size());
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= std::uint64_t{bytes[body + static_cast<std::size_t>(i)]} << (8 * i);
    if (stored != fnv(bytes.data(), body)) Reader::corrupt("checksum mismatch");
  }

  Reader r(bytes, body);
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8();
  r.u32();
  RunStateFile file;
  file.config_json = r.str();
  EnsembleState& s = file.state;
  s.net.input_dim = r.u64();
  s.net.trunk_layers = read_sizes(r);
  s.net.head_layers = read_sizes(r);
  s.net.embed_dim = r.u64();
  const std::uint8_t act = r.u8();
  if (act > static_cast<std::uint8_t>(Activation::Tanh)) Reader::corrupt("activation tag");
  s.net.activation = static_cast<Activation>(act);
  s.net.final_relu = r.u8() != 0;
  s.net.rng_seed = r.u64();

  s.init_rng = read_rng(r);
  s.shuffle_rng = read_rng(r);
  s.strategy_rng = read_rng(r);
  s.tasks_completed = r.i32();
  s.task_classes.resize(r.count(1u << 20));
  for (auto& cs : s.task_classes) cs = read_ints(r);
  if (s.tasks_completed < 0 || static_cast<std::size_t>(s.tasks_completed) != s.task_classes.size())
    Reader::corrupt("task count");

  s.trunk.frozen = r.u8() != 0;
  s.trunk.net = read_mlp(r);
  s.heads.resize(r.count(4096));
  for (auto& h : s.heads) {
    h.index = r.i32();
    h.trained = r.u8() != 0;
    h.net = read_mlp(r);
  }
  for (std::size_t k = 0; k < s.heads.size(); ++k)
    if (s.heads[k].index != static_cast<int>(k)) Reader::corrupt("expert index order");
  s.banks.resize(s.heads.size());
  for (auto& b : s.banks) b = read_bank(r);

  s.logs.resize(r.count(1u << 20));
  for (auto& log : s.logs) {
    log.task = r.i32();
    log.classes = read_ints(r);
    log.selection = r.u8() != 0;
    log.trained = read_ints(r);
    log.overlap.resize(r.count(4096));
    r.f64s(log.overlap);
    log.final_loss = r.f64();
    log.final_ce = r.f64();
    log.final_kd = r.f64();
    log.wall_seconds = r.f64();
  }
  if (!r.done()) Reader::corrupt("trailing bytes");
  return file;
}

void save_state(const std::filesystem::path& path, const RunStateFile& file) {
  const auto bytes = encode_state(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

RunStateFile load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_state(bytes);
}

}  // namespace seed
