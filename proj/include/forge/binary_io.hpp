#pragma once

// Little-endian byte codecs, SHA-256 and write-then-rename file output.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace forge {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f32(float v);
  void f64(double v);
  void bytes(std::string_view b) { buf_.append(b); }

  const std::string& data() const { return buf_; }
  std::string take() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }
  void reserve(std::size_t n) { buf_.reserve(n); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

// Reads from a byte span; running past the end throws FormatError naming the
// absolute byte offset (base + position) and `context`.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::uint64_t base_offset = 0, std::string context = {})
      : data_(data), base_(base_offset), context_(std::move(context)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  float f32();
  double f64();
  std::string_view bytes(std::size_t n);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::uint64_t offset() const { return base_ + pos_; }

 private:
  std::uint64_t get(std::size_t width);
  void need(std::size_t n) const;
  std::string_view data_;
  std::size_t pos_ = 0;
  std::uint64_t base_;
  std::string context_;
};

void store_le_f32(char* dst, float v);
float load_le_f32(const char* src);

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

// Writes to "<path>.tmp" and renames over `path`; the temporary is removed
// on failure.
void atomic_write_file(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace forge
