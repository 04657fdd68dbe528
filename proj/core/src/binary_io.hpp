#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "scmlens/error.hpp"

namespace scmlens::detail {

class ByteWriter {
 public:
  void put_bytes(std::string_view bytes) { buf_.append(bytes); }
  void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void put_u16(std::uint16_t v) { put_le(v, 2); }
  void put_u32(std::uint32_t v) { put_le(v, 4); }
  void put_i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v), 4); }
  void put_u64(std::uint64_t v) { put_le(v, 8); }
  void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
  void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void put_string(std::string_view s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }

  const std::string& bytes() const noexcept { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void expect_magic(std::string_view magic) {
    require(magic.size());
    if (bytes_.substr(pos_, magic.size()) != magic) {
      throw FormatError(context_ + ": bad magic at offset 0, expected '" + std::string(magic) + "'");
    }
    pos_ += magic.size();
  }
  void expect_version(std::uint32_t version) {
    const std::size_t at = pos_;
    const std::uint32_t v = u32();
    if (v != version) {
      throw FormatError(context_ + ": unsupported version " + std::to_string(v) + " at offset " +
                        std::to_string(at) + ", expected " + std::to_string(version));
    }
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(4))); }
  std::uint64_t u64() { return get_le(8); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(4))); }
  double f64() { return std::bit_cast<double>(get_le(8)); }
  std::string string() {
    const std::uint32_t n = u32();
    require(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  /// Fails unless exactly n bytes remain readable.
  void require(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError(context_ + ": truncated at offset " + std::to_string(pos_) + ", needed " +
                        std::to_string(n) + " more bytes but only " + std::to_string(remaining()) + " remain");
    }
  }
  void expect_end() const {
    if (remaining() != 0) {
      throw FormatError(context_ + ": " + std::to_string(remaining()) + " surplus bytes after offset " +
                        std::to_string(pos_));
    }
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(context_ + ": " + what + " (offset " + std::to_string(pos_) + ")");
  }
  const std::string& context() const noexcept { return context_; }

 private:
  std::uint64_t get_le(int n) {
    require(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace scmlens::detail
