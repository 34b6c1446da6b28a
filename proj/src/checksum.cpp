#include "aesadv/checksum.hpp"

#include <cstdio>

#include "aesadv/json_io.hpp"

namespace aesadv {

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
  return buf;
}

std::string checksum_hex(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.hex();
}

std::string file_checksum_hex(const std::filesystem::path& path) { return checksum_hex(read_file(path)); }

}  // namespace aesadv
