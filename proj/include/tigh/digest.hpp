#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace tigh {

// Incremental SHA-256 (OpenSSL-backed). Used for config hashes and parameter
// checksums; both the checkpoint format and the fold log embed digests.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t len);
  void update(const std::string& s) { update(s.data(), s.size()); }
  std::array<std::uint8_t, 32> finish();

 private:
  void* ctx_;
};

std::array<std::uint8_t, 32> sha256(const void* data, std::size_t len);
std::string hex_digest(const std::array<std::uint8_t, 32>& d);
std::string sha256_hex(const std::string& s);

}  // namespace tigh
