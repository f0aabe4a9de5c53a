#pragma once

// Minimal read-only ZIP container access (stored + deflate, ZIP64 sizes).

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qpool::data::detail {

struct ZipEntry {
  std::string name;
  std::uint16_t method = 0;
  std::uint32_t crc = 0;
  std::uint64_t compressed_size = 0;
  std::uint64_t uncompressed_size = 0;
  std::uint64_t local_offset = 0;
};

class ZipReader {
 public:
  explicit ZipReader(std::vector<std::uint8_t> bytes);

  const std::vector<ZipEntry>& entries() const { return entries_; }
  const ZipEntry* find(std::string_view name) const;
  std::vector<std::uint8_t> read(const ZipEntry& entry) const;

 private:
  std::vector<std::uint8_t> bytes_;
  std::vector<ZipEntry> entries_;
};

}  // namespace qpool::data::detail
