#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tigh {

// Binary tensor container: magic "TGH1", u32 rank, u32 dims[rank], then the
// float32 payload in row-major order. All integers and floats little-endian.
struct TghTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

void write_tgh(const std::string& path, const TghTensor& t);
TghTensor read_tgh(const std::string& path);

// Little-endian scalar helpers shared with the checkpoint writer.
void put_u32(std::string& out, std::uint32_t v);
void put_f32(std::string& out, float v);
std::uint32_t get_u32(const std::string& buf, std::size_t& off);
float get_f32(const std::string& buf, std::size_t& off);
std::string read_binary_file(const std::string& path);

}  // namespace tigh
