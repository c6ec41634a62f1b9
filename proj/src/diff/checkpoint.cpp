#include "netmod/diff/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace netmod::diff {

namespace {

constexpr char kMagic[4] = {'N', 'M', 'C', 'K'};

void put_u32(std::ostream& out, uint32_t x) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (x >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (x >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<char*>(b), 8);
}

void put_f64(std::ostream& out, double x) {
  uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(out, bits);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= (uint32_t)b[i] << (8 * i);
  return x;
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= (uint64_t)b[i] << (8 * i);
  return x;
}

double get_f64(std::istream& in) {
  uint64_t bits = get_u64(in);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const nlohmann::ordered_json& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::MissingArtifact, "cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  std::string m = manifest.dump();
  put_u64(out, m.size());
  out.write(m.data(), (std::streamsize)m.size());
  put_u64(out, params.all().size());
  for (const auto& [name, t] : params.all()) {
    put_u32(out, (uint32_t)name.size());
    out.write(name.data(), (std::streamsize)name.size());
    put_u64(out, (uint64_t)t.rows);
    put_u64(out, (uint64_t)t.cols);
    for (double x : t.v) put_f64(out, x);
  }
  if (!out) fail(Errc::MissingArtifact, "write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::MissingArtifact, "cannot open checkpoint '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    fail(Errc::ParseError, "'" + path + "' is not a checkpoint");
  uint32_t version = get_u32(in);
  if (version != kCheckpointVersion)
    fail(Errc::ParseError, "unsupported checkpoint version " + std::to_string(version));
  uint64_t mlen = get_u64(in);
  std::string m(mlen, '\0');
  in.read(m.data(), (std::streamsize)mlen);

  Checkpoint ck;
  try {
    ck.manifest = nlohmann::ordered_json::parse(m);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("bad checkpoint manifest: ") + e.what());
  }
  uint64_t n = get_u64(in);
  for (uint64_t k = 0; k < n; ++k) {
    uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    int64_t rows = (int64_t)get_u64(in);
    int64_t cols = (int64_t)get_u64(in);
    Tensor t(rows, cols);
    for (double& x : t.v) x = get_f64(in);
    if (!in) fail(Errc::ParseError, "truncated checkpoint '" + path + "'");
    ck.params.add(name, std::move(t));
  }
  return ck;
}

}  // namespace netmod::diff
