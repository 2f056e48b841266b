#include "mflab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mflab {

namespace {
constexpr char kMagic[5] = {'M', 'F', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::vector<std::uint8_t>& b;
  std::size_t pos = 0;
  std::uint8_t u8() {
    if (pos >= b.size()) throw CheckpointError("checkpoint: truncated");
    return b[pos++];
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(u8()) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

void put_header(std::vector<std::uint8_t>& out, std::uint32_t kind) {
  out.insert(out.end(), kMagic, kMagic + 5);
  put_u32(out, kVersion);
  put_u32(out, kind);
}

void check_header(Reader& r, std::uint32_t& kind) {
  for (char c : kMagic)
    if (r.u8() != static_cast<std::uint8_t>(c))
      throw CheckpointError("checkpoint: magic mismatch");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw CheckpointError("checkpoint: unsupported version " +
                          std::to_string(version));
  kind = r.u32();
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParticleEnsemble& e) {
  std::vector<std::uint8_t> out;
  put_header(out, 1);
  put_u32(out, static_cast<std::uint32_t>(e.N));
  put_u32(out, static_cast<std::uint32_t>(e.d));
  put_f64(out, e.t);
  put_u64(out, e.rng.seed);
  put_u64(out, e.step);
  for (int i = 0; i < e.N; ++i) put_u64(out, e.stream_ids[i]);
  for (int i = 0; i < e.N; ++i)
    for (int k = 0; k < e.d; ++k) put_f64(out, e.positions(i, k));
  return out;
}

std::vector<std::uint8_t> encode_checkpoint(const GridDensity& m) {
  std::vector<std::uint8_t> out;
  put_header(out, 2);
  put_u32(out, static_cast<std::uint32_t>(m.spec.d));
  put_u32(out, static_cast<std::uint32_t>(m.spec.n));
  put_f64(out, m.spec.L);
  put_f64(out, m.t);
  for (long i = 0; i < m.v.size(); ++i) put_f64(out, m.v[i]);
  return out;
}

DecodedCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  std::uint32_t kind = 0;
  check_header(r, kind);
  DecodedCheckpoint out;
  out.kind = static_cast<int>(kind);
  if (kind == 1) {
    const int N = static_cast<int>(r.u32());
    const int d = static_cast<int>(r.u32());
    if (N < 1 || d < 1 || d > 16)
      throw CheckpointError("checkpoint: bad ensemble shape");
    ParticleEnsemble e(N, d, 0);
    e.t = r.f64();
    e.rng.seed = r.u64();
    e.step = r.u64();
    for (int i = 0; i < N; ++i) e.stream_ids[i] = r.u64();
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < d; ++k) e.positions(i, k) = r.f64();
    if (r.pos != bytes.size()) throw CheckpointError("checkpoint: trailing bytes");
    out.ensemble = std::move(e);
  } else if (kind == 2) {
    GridSpec g;
    g.d = static_cast<int>(r.u32());
    g.n = static_cast<int>(r.u32());
    g.L = r.f64();
    if (g.d < 1 || g.d > 2 || g.n < 1 || !(g.L > 0))
      throw CheckpointError("checkpoint: bad grid shape");
    const double t = r.f64();
    Eigen::ArrayXd v(g.size());
    for (long i = 0; i < v.size(); ++i) v[i] = r.f64();
    if (r.pos != bytes.size()) throw CheckpointError("checkpoint: trailing bytes");
    out.density = GridDensity(g, std::move(v), t);
  } else {
    throw CheckpointError("checkpoint: unknown kind tag " +
                          std::to_string(kind));
  }
  return out;
}

void write_checkpoint_file(const std::string& path,
                           const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint: write failed for " + path);
}

std::vector<std::uint8_t> read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::string describe_checkpoint(const std::vector<std::uint8_t>& bytes) {
  const DecodedCheckpoint d = decode_checkpoint(bytes);
  std::ostringstream out;
  if (d.kind == 1) {
    out << "ensemble: N=" << d.ensemble.N << " d=" << d.ensemble.d
        << " t=" << d.ensemble.t << " seed=" << d.ensemble.rng.seed
        << " step=" << d.ensemble.step;
  } else {
    out << "grid density: d=" << d.density.spec.d << " n=" << d.density.spec.n
        << " L=" << d.density.spec.L << " t=" << d.density.t
        << " mass=" << d.density.mass();
  }
  return out.str();
}

}  // namespace mflab
