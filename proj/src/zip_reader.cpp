#include "zip_reader.hpp"

#include <zlib.h>

#include <cstring>

#include "qpool/errors.hpp"

namespace qpool::data::detail {

namespace {

constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
constexpr std::uint32_t kCentralHeader = 0x02014b50;
constexpr std::uint32_t kLocalHeader = 0x04034b50;
constexpr std::uint32_t kZip64EndLocator = 0x07064b50;
constexpr std::uint32_t kZip64EndOfCentralDir = 0x06064b50;

class Cursor {
 public:
  Cursor(const std::vector<std::uint8_t>& bytes, std::uint64_t pos) : bytes_(bytes), pos_(pos) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw DataError("zip: truncated record");
    T v{};
    // Little-endian host assumed, as for the .npy payloads themselves.
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError("zip: truncated name");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void skip(std::uint64_t n) { pos_ += n; }
  std::uint64_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::uint64_t pos_;
};

}  // namespace

ZipReader::ZipReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < 22) throw DataError("zip: file too short to be an archive");
  std::int64_t eocd = -1;
  const auto lowest = bytes_.size() > 22 + 65535 ? bytes_.size() - 22 - 65535 : 0;
  for (auto i = static_cast<std::int64_t>(bytes_.size()) - 22; i >= static_cast<std::int64_t>(lowest);
       --i) {
    std::uint32_t sig;
    std::memcpy(&sig, bytes_.data() + i, 4);
    if (sig == kEndOfCentralDir) {
      eocd = i;
      break;
    }
  }
  if (eocd < 0) throw DataError("zip: end-of-central-directory record not found");

  Cursor c(bytes_, static_cast<std::uint64_t>(eocd) + 10);
  std::uint64_t count = c.get<std::uint16_t>();
  c.get<std::uint32_t>();  // central directory size
  std::uint64_t cd_offset = c.get<std::uint32_t>();

  if (cd_offset == 0xFFFFFFFFu || count == 0xFFFF) {
    if (eocd < 20) throw DataError("zip: missing ZIP64 locator");
    Cursor loc(bytes_, static_cast<std::uint64_t>(eocd) - 20);
    if (loc.get<std::uint32_t>() != kZip64EndLocator) throw DataError("zip: bad ZIP64 locator");
    loc.get<std::uint32_t>();
    Cursor z64(bytes_, loc.get<std::uint64_t>());
    if (z64.get<std::uint32_t>() != kZip64EndOfCentralDir) throw DataError("zip: bad ZIP64 record");
    z64.skip(8 + 2 + 2 + 4 + 4 + 8);
    count = z64.get<std::uint64_t>();
    z64.get<std::uint64_t>();
    cd_offset = z64.get<std::uint64_t>();
  }

  Cursor cd(bytes_, cd_offset);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (cd.get<std::uint32_t>() != kCentralHeader) throw DataError("zip: corrupt central directory");
    cd.skip(2 + 2 + 2);
    ZipEntry e;
    e.method = cd.get<std::uint16_t>();
    cd.skip(2 + 2);
    e.crc = cd.get<std::uint32_t>();
    e.compressed_size = cd.get<std::uint32_t>();
    e.uncompressed_size = cd.get<std::uint32_t>();
    const auto name_len = cd.get<std::uint16_t>();
    const auto extra_len = cd.get<std::uint16_t>();
    const auto comment_len = cd.get<std::uint16_t>();
    cd.skip(2 + 2 + 4);
    e.local_offset = cd.get<std::uint32_t>();
    e.name = cd.str(name_len);

    const auto extra_end = cd.pos() + extra_len;
    while (cd.pos() + 4 <= extra_end) {
      const auto id = cd.get<std::uint16_t>();
      const auto len = cd.get<std::uint16_t>();
      const auto next = cd.pos() + len;
      if (id == 0x0001) {
        if (e.uncompressed_size == 0xFFFFFFFFu) e.uncompressed_size = cd.get<std::uint64_t>();
        if (e.compressed_size == 0xFFFFFFFFu) e.compressed_size = cd.get<std::uint64_t>();
        if (e.local_offset == 0xFFFFFFFFu) e.local_offset = cd.get<std::uint64_t>();
      }
      cd.skip(next - cd.pos());
    }
    cd.skip(extra_end - cd.pos() + comment_len);
    entries_.push_back(std::move(e));
  }
}

const ZipEntry* ZipReader::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<std::uint8_t> ZipReader::read(const ZipEntry& entry) const {
  Cursor c(bytes_, entry.local_offset);
  if (c.get<std::uint32_t>() != kLocalHeader) throw DataError("zip: bad local header for " + entry.name);
  c.skip(2 + 2 + 2 + 2 + 2 + 4 + 4 + 4);
  const auto name_len = c.get<std::uint16_t>();
  const auto extra_len = c.get<std::uint16_t>();
  c.skip(name_len + extra_len);
  const auto start = c.pos();
  if (start + entry.compressed_size > bytes_.size()) {
    throw DataError("zip: member " + entry.name + " is truncated");
  }

  std::vector<std::uint8_t> out(entry.uncompressed_size);
  if (entry.method == 0) {
    if (entry.compressed_size != entry.uncompressed_size) {
      throw DataError("zip: stored member " + entry.name + " has inconsistent sizes");
    }
    std::memcpy(out.data(), bytes_.data() + start, out.size());
  } else if (entry.method == 8) {
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw DataError("zip: inflate init failed");
    zs.next_in = const_cast<Bytef*>(bytes_.data() + start);
    zs.avail_in = static_cast<uInt>(entry.compressed_size);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != out.size()) {
      throw DataError("zip: failed to inflate member " + entry.name);
    }
  } else {
    throw DataError("zip: member " + entry.name + " uses unsupported compression method " +
                    std::to_string(entry.method));
  }
  if (crc32(0L, out.data(), static_cast<uInt>(out.size())) != entry.crc) {
    throw DataError("zip: CRC mismatch in member " + entry.name);
  }
  return out;
}

}  // namespace qpool::data::detail
