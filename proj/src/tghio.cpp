#include "tigh/tghio.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tigh/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace tigh {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f32(std::string& out, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(const std::string& buf, std::size_t& off) {
  if (off + 4 > buf.size()) throw IoError("truncated binary stream");
  std::uint32_t v;
  std::memcpy(&v, buf.data() + off, 4);
  off += 4;
  return v;
}

float get_f32(const std::string& buf, std::size_t& off) {
  if (off + 4 > buf.size()) throw IoError("truncated binary stream");
  float v;
  std::memcpy(&v, buf.data() + off, 4);
  off += 4;
  return v;
}

std::string read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

void write_tgh(const std::string& path, const TghTensor& t) {
  if (t.numel() != t.data.size()) throw ShapeError("tgh payload does not match dims");
  std::string out;
  out.reserve(8 + 4 * t.dims.size() + 4 * t.data.size());
  out += "TGH1";
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  for (float v : t.data) put_f32(out, v);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to " + path);
}

TghTensor read_tgh(const std::string& path) {
  std::string buf = read_binary_file(path);
  if (buf.size() < 8 || buf.compare(0, 4, "TGH1") != 0)
    throw IoError(path + ": not a TGH1 file");
  std::size_t off = 4;
  TghTensor t;
  std::uint32_t rank = get_u32(buf, off);
  if (rank > 8) throw IoError(path + ": implausible rank");
  t.dims.resize(rank);
  for (auto& d : t.dims) d = get_u32(buf, off);
  std::size_t n = t.numel();
  if (buf.size() != off + 4 * n) throw IoError(path + ": payload size mismatch");
  t.data.resize(n);
  std::memcpy(t.data.data(), buf.data() + off, 4 * n);
  return t;
}

}  // namespace tigh
