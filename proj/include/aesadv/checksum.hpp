#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace aesadv {

// 64-bit FNV-1a. Used for artifact integrity stamps, not for security.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      hash_ ^= c;
      hash_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return hash_; }
  std::string hex() const;

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string checksum_hex(std::string_view bytes);
std::string file_checksum_hex(const std::filesystem::path& path);

}  // namespace aesadv
