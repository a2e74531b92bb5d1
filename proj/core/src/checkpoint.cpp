#include "rtp_arb/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rtp_arb/errors.hpp"

namespace rtp_arb {

namespace {

constexpr char kMagic[8] = {'R', 'T', 'P', 'A', 'R', 'B', 'Q', '\0'};
constexpr std::uint64_t kMaxDims = 64;
constexpr std::uint64_t kMaxWidth = 1 << 20;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  void block(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  std::string& str() { return out_; }

 private:
  void put(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  void block(std::vector<double>& v) {
    for (double& x : v) x = f64();
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint64_t get(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_params(Writer& w, const QNetwork& net) {
  for (const auto& l : net.layers) {
    w.block(l.weights);
    w.block(l.bias);
  }
}

void read_params(Reader& r, QNetwork& net) {
  for (auto& l : net.layers) {
    r.block(l.weights);
    r.block(l.bias);
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.net.layers.empty()) throw CheckpointError("cannot save an empty network");
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  const auto dims = ckpt.net.dims();
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) w.u64(d);
  w.f64(ckpt.normalizer.price_mean);
  w.f64(ckpt.normalizer.price_scale);
  w.f64(ckpt.normalizer.charge_scale);
  w.i32(ckpt.metadata.training_year);
  w.u64(ckpt.metadata.step);
  w.f64(ckpt.metadata.eval_reward);
  write_params(w, ckpt.net);

  const auto& opt = ckpt.optimizer;
  w.u64(opt.step);
  w.f64(opt.learning_rate);
  w.f64(opt.beta1);
  w.f64(opt.beta2);
  w.f64(opt.epsilon);
  const bool has_moments = opt.first_moment.dims() == dims && opt.second_moment.dims() == dims;
  const QNetwork zero = has_moments ? QNetwork{} : QNetwork::zeros_like(ckpt.net);
  write_params(w, has_moments ? opt.first_moment : zero);
  write_params(w, has_moments ? opt.second_moment : zero);

  const std::uint64_t hash = fnv1a(w.str());
  w.u64(hash);
  return std::move(w.str());
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.remaining() < sizeof kMagic || std::memcmp(r.take(sizeof kMagic).data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint: bad magic bytes");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t ndims = r.u32();
  if (ndims < 2 || ndims > kMaxDims) throw CheckpointError("implausible layer count " + std::to_string(ndims));
  std::vector<std::size_t> dims(ndims);
  for (auto& d : dims) {
    const std::uint64_t v = r.u64();
    if (v == 0 || v > kMaxWidth) throw CheckpointError("implausible layer width " + std::to_string(v));
    d = static_cast<std::size_t>(v);
  }

  Checkpoint ckpt;
  ckpt.net = QNetwork::zeros(dims);
  // Reject truncation before allocating the moment blocks.
  const std::size_t param_bytes = ckpt.net.parameter_count() * 8;
  if (r.remaining() < 3 * param_bytes) throw CheckpointError("checkpoint truncated: parameter blocks incomplete");

  ckpt.normalizer.price_mean = r.f64();
  ckpt.normalizer.price_scale = r.f64();
  ckpt.normalizer.charge_scale = r.f64();
  ckpt.metadata.training_year = r.i32();
  ckpt.metadata.step = r.u64();
  ckpt.metadata.eval_reward = r.f64();
  read_params(r, ckpt.net);

  auto& opt = ckpt.optimizer;
  opt.step = r.u64();
  opt.learning_rate = r.f64();
  opt.beta1 = r.f64();
  opt.beta2 = r.f64();
  opt.epsilon = r.f64();
  opt.first_moment = QNetwork::zeros(dims);
  opt.second_moment = QNetwork::zeros(dims);
  read_params(r, opt.first_moment);
  read_params(r, opt.second_moment);

  const std::size_t body_end = r.pos();
  const std::uint64_t stored = r.u64();
  if (r.remaining() != 0) throw CheckpointError("unexpected trailing bytes after checkpoint");
  if (stored != fnv1a(bytes.substr(0, body_end))) throw CheckpointError("checkpoint hash mismatch (corrupt file)");
  if (!(ckpt.normalizer.price_scale > 0.0) || !(ckpt.normalizer.charge_scale > 0.0)) {
    throw CheckpointError("checkpoint normalizer scales must be positive");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_checkpoint(buf.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace rtp_arb
