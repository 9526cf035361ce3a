#pragma once

// Little-endian scalar encoding for the embedding and slab file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "memctx/error.hpp"

namespace memctx::detail {

class LittleEndianReader {
 public:
  LittleEndianReader(std::vector<unsigned char> bytes, std::string source, std::string module)
      : bytes_(std::move(bytes)), source_(std::move(source)), module_(std::move(module)) {}

  static LittleEndianReader open(const std::string& path, std::string module, ErrorKind missing_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(missing_kind, module, "cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return LittleEndianReader(std::move(bytes), path, std::move(module));
  }

  std::uint32_t u32(ErrorKind kind) {
    need(4, kind);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[offset_ + i];
    offset_ += 4;
    return v;
  }

  float f32(ErrorKind kind) { return std::bit_cast<float>(u32(kind)); }

  std::size_t offset() const noexcept { return offset_; }
  std::size_t remaining() const noexcept { return bytes_.size() - offset_; }
  const std::string& source() const noexcept { return source_; }

  // Room for `count` items of `width` bytes, without overflowing count * width.
  void need_items(std::uint64_t count, std::size_t width, ErrorKind kind) const {
    if (count > remaining() / width) {
      throw Error(kind, module_,
                  source_ + ": truncated: header promises " + std::to_string(count) + " items of " +
                      std::to_string(width) + " bytes but only " + std::to_string(remaining()) +
                      " bytes follow offset " + std::to_string(offset_));
    }
  }

  void need(std::size_t n, ErrorKind kind) const {
    if (remaining() < n) {
      throw Error(kind, module_,
                  source_ + ": truncated at byte " + std::to_string(bytes_.size()) + ", needed " +
                      std::to_string(n) + " more bytes at offset " + std::to_string(offset_));
    }
  }

 private:
  std::vector<unsigned char> bytes_;
  std::string source_;
  std::string module_;
  std::size_t offset_ = 0;
};

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<unsigned char>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes, const std::string& module) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, module, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::io, module, "write failed for " + path);
}

}  // namespace memctx::detail
