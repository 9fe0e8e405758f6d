#include "vidpred/io/container.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace vidpred::io {
namespace {

constexpr char kMagic[4] = {'V', 'P', 'C', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size())
      throw std::runtime_error("container: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<size_t>(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void Container::save(const std::string& path) const {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u64(buf, meta.size());
  buf += meta;
  put_u64(buf, arrays.size());
  for (const auto& [name, t] : arrays) {
    put_u64(buf, name.size());
    buf += name;
    put_u32(buf, static_cast<uint32_t>(t.ndim()));
    for (int64_t d : t.shape()) put_u64(buf, static_cast<uint64_t>(d));
    const size_t nbytes = static_cast<size_t>(t.size()) * sizeof(double);
    const size_t off = buf.size();
    buf.resize(off + nbytes);
    std::memcpy(buf.data() + off, t.data(), nbytes);
  }
  const auto crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("container: cannot open for write: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("container: write failed: " + path);
}

Container Container::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("container: cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string buf = ss.str();
  if (buf.size() < 12) throw std::runtime_error("container: truncated file");

  const std::string body = buf.substr(0, buf.size() - 4);
  Reader tail{buf, buf.size() - 4};
  const uint32_t stored_crc = tail.u32();
  const auto crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
  if (crc != stored_crc)
    throw std::runtime_error("container: checksum mismatch in " + path);

  Reader r{body};
  if (r.bytes(4) != std::string(kMagic, 4))
    throw std::runtime_error("container: bad magic in " + path);
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("container: unsupported version " +
                             std::to_string(version) + " in " + path);

  Container c;
  c.meta = r.bytes(static_cast<size_t>(r.u64()));
  const uint64_t n = r.u64();
  for (uint64_t i = 0; i < n; ++i) {
    std::string name = r.bytes(static_cast<size_t>(r.u64()));
    const uint32_t ndim = r.u32();
    std::vector<int64_t> shape(ndim);
    int64_t numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<int64_t>(r.u64());
      if (shape[d] <= 0) throw std::runtime_error("container: bad dim in " + name);
      numel *= shape[d];
    }
    Tensor t(shape);
    const size_t nbytes = static_cast<size_t>(numel) * sizeof(double);
    r.need(nbytes);
    std::memcpy(t.data(), body.data() + r.pos, nbytes);
    r.pos += nbytes;
    c.arrays.emplace(std::move(name), std::move(t));
  }
  return c;
}

const Tensor& Container::get(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end())
    throw std::runtime_error("container: missing entry '" + name + "'");
  return it->second;
}

const Tensor& Container::expect(const std::string& name,
                                const std::vector<int64_t>& shape) const {
  const Tensor& t = get(name);
  if (t.shape() != shape)
    throw std::runtime_error("container: entry '" + name + "' has shape " +
                             shape_str(t) + ", expected " + shape_str(shape));
  return t;
}

}  // namespace vidpred::io
