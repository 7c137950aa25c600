#include "pso_cli/checkpoint.hpp"

#include "pso/rng.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pso::cli {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'O', 'C', 'K', 'P', 'T', '\0'};
constexpr char kGramMagic[8] = {'P', 'S', 'O', 'G', 'R', 'A', 'M', '\0'};
constexpr std::uint32_t kGramVersion = 1;

class Writer {
 public:
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(p[i]);
  }
  std::string finish() {
    u64(fnv1a64(buf_));
    return std::move(buf_);
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& bytes, const char* what) : b_(bytes), what_(what) {
    if (b_.size() < 8) fail("file is too short");
    std::uint64_t stored = 0;
    for (int k = 0; k < 8; ++k)
      stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[b_.size() - 8 + k])) << (8 * k);
    end_ = b_.size() - 8;
    if (fnv1a64(std::string_view(b_.data(), end_)) != stored) fail("checksum mismatch (file truncated or corrupted)");
  }

  void expect_magic(const char (&magic)[8]) {
    need(8);
    if (std::memcmp(b_.data() + pos_, magic, 8) != 0) fail("bad magic");
    pos_ += 8;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(u8()) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(u8()) << (8 * k);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(double* p, std::size_t n) {
    if (n > (end_ - pos_) / 8) fail("array length exceeds file size");
    for (std::size_t i = 0; i < n; ++i) p[i] = f64();
  }
  void done() {
    if (pos_ != end_) fail("trailing bytes before checksum");
  }
  [[noreturn]] void fail(const std::string& msg) const { throw CheckpointError(std::string(what_) + ": " + msg); }

 private:
  void need(std::size_t n) {
    if (end_ - pos_ < n) fail("unexpected end of data");
  }

  const std::string& b_;
  const char* what_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

void put_spec(Writer& w, const NetworkSpec& s) {
  w.i32(s.input_dim);
  w.u32(static_cast<std::uint32_t>(s.topology));
  w.i32(s.width);
  w.i32(s.num_blocks);
  w.i32(s.block_size);
  w.i32(s.num_layers);
  w.u32(static_cast<std::uint32_t>(s.activation.kind));
  w.f64(s.activation.slope);
  w.u8(s.shortcuts ? 1 : 0);
  w.u8(s.output.bounded ? 1 : 0);
  w.f64(s.output.h_min);
  w.f64(s.output.h_max);
}

NetworkSpec get_spec(Reader& r) {
  NetworkSpec s;
  s.input_dim = r.i32();
  const auto topo = r.u32();
  if (topo > static_cast<std::uint32_t>(Topology::linear)) r.fail("unknown topology");
  s.topology = static_cast<Topology>(topo);
  s.width = r.i32();
  s.num_blocks = r.i32();
  s.block_size = r.i32();
  s.num_layers = r.i32();
  const auto act = r.u32();
  if (act > static_cast<std::uint32_t>(ActivationKind::identity)) r.fail("unknown activation");
  s.activation.kind = static_cast<ActivationKind>(act);
  s.activation.slope = r.f64();
  s.shortcuts = r.u8() != 0;
  s.output.bounded = r.u8() != 0;
  s.output.h_min = r.f64();
  s.output.h_max = r.f64();
  try {
    s.validate();
  } catch (const SpecError& e) {
    r.fail(std::string("stored network spec is invalid: ") + e.what());
  }
  return s;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  if (c.theta.size() != c.spec.param_count()) throw CheckpointError("parameter length does not match spec");
  if (c.mean.size() != c.std.size()) throw CheckpointError("preconditioner mean/std length mismatch");
  Writer w;
  w.raw(kMagic, 8);
  w.u32(kCheckpointVersion);
  w.u64(c.experiment_hash);
  w.i64(c.iteration);
  put_spec(w, c.spec);
  w.u32(static_cast<std::uint32_t>(c.mean.size()));
  w.f64s(c.mean.data(), static_cast<std::size_t>(c.mean.size()));
  w.f64s(c.std.data(), static_cast<std::size_t>(c.std.size()));
  w.u32(static_cast<std::uint32_t>(c.down.kind));
  w.u32(c.down.dim);
  w.u64(c.down.params.size());
  w.f64s(c.down.params.data(), c.down.params.size());
  w.u32(kThetaLayoutVersion);
  w.u64(c.theta.size());
  w.f64s(c.theta.values.data(), c.theta.size());
  return w.finish();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes, "checkpoint");
  r.expect_magic(kMagic);
  if (r.u32() != kCheckpointVersion) r.fail("unsupported format version");
  Checkpoint c;
  c.experiment_hash = r.u64();
  c.iteration = r.i64();
  c.spec = get_spec(r);
  const auto n = r.u32();
  if (static_cast<int>(n) != c.spec.input_dim) r.fail("preconditioner dimension does not match spec");
  c.mean.resize(n);
  c.std.resize(n);
  r.f64s(c.mean.data(), n);
  r.f64s(c.std.data(), n);
  c.down.kind = static_cast<DistributionDescriptor::Kind>(r.u32());
  c.down.dim = r.u32();
  const auto count = r.u64();
  if (count > bytes.size() / 8) r.fail("descriptor length exceeds file size");
  c.down.params.resize(count);
  r.f64s(c.down.params.data(), count);
  if (r.u32() != kThetaLayoutVersion) r.fail("unsupported parameter layout version");
  const auto len = r.u64();
  if (len != c.spec.param_count()) r.fail("stored parameter length does not match spec");
  c.theta.values.resize(static_cast<Eigen::Index>(len));
  r.f64s(c.theta.values.data(), len);
  r.done();
  return c;
}

std::string encode_gramian(const Eigen::MatrixXd& G) {
  Writer w;
  w.raw(kGramMagic, 8);
  w.u32(kGramVersion);
  w.u64(static_cast<std::uint64_t>(G.rows()));
  w.u64(static_cast<std::uint64_t>(G.cols()));
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    for (Eigen::Index j = 0; j < G.cols(); ++j) w.f64(G(i, j));
  return w.finish();
}

Eigen::MatrixXd decode_gramian(const std::string& bytes) {
  Reader r(bytes, "gramian");
  r.expect_magic(kGramMagic);
  if (r.u32() != kGramVersion) r.fail("unsupported format version");
  const auto rows = r.u64();
  const auto cols = r.u64();
  if (cols != 0 && rows > bytes.size() / 8 / cols) r.fail("matrix size exceeds file size");
  Eigen::MatrixXd G(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = r.f64();
  r.done();
  return G;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

void save_checkpoint(const Checkpoint& c, const std::string& path) { write_file(path, encode_checkpoint(c)); }

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

}  // namespace pso::cli
