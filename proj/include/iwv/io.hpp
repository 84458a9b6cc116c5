#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <zlib.h>

#include "iwv/errors.hpp"

namespace iwv {

inline bool looks_gzip(std::string_view bytes) {
  return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1F &&
         static_cast<unsigned char>(bytes[1]) == 0x8B;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string gunzip_bytes(std::string_view in) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw IoError("zlib inflateInit failed");
  std::string out;
  out.resize(std::max<std::size_t>(in.size() * 4, std::size_t{1} << 16));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::size_t written = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = reinterpret_cast<Bytef*>(out.data() + written);
    zs.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&zs, Z_NO_FLUSH);
    written = out.size() - zs.avail_out;
    if (rc == Z_BUF_ERROR && zs.avail_in == 0) {
      inflateEnd(&zs);
      throw ParseError("truncated gzip stream");
    }
    if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) {
      inflateEnd(&zs);
      throw ParseError("corrupt gzip stream");
    }
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

inline std::string gzip_bytes(std::string_view in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw IoError("zlib deflateInit failed");
  }
  std::string out;
  out.resize(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IoError("gzip compression failed");
  out.resize(out.size() - zs.avail_out);
  return out;
}

// Whole-file read with transparent gzip decompression, detected by the
// 0x1F 0x8B magic bytes.
inline std::string read_file_auto(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  if (looks_gzip(bytes)) return gunzip_bytes(bytes);
  return bytes;
}

// Little-endian primitives. Byte-level assembly keeps the on-disk formats
// identical regardless of host endianness.

inline void append_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void append_u64_le(std::string& out, std::uint64_t v) {
  append_u32_le(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFull));
  append_u32_le(out, static_cast<std::uint32_t>(v >> 32));
}

inline void append_f32_le(std::string& out, float v) {
  append_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

inline void append_f64_le(std::string& out, double v) {
  append_u64_le(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t load_u32_le(const char* p) {
  const auto* b = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t load_u64_le(const char* p) {
  return static_cast<std::uint64_t>(load_u32_le(p)) |
         (static_cast<std::uint64_t>(load_u32_le(p + 4)) << 32);
}

inline float load_f32_le(const char* p) { return std::bit_cast<float>(load_u32_le(p)); }

inline double load_f64_le(const char* p) { return std::bit_cast<double>(load_u64_le(p)); }

// Sequential reader over an in-memory buffer; keeps a byte offset for
// truncation diagnostics.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool eof() const { return pos_ >= data_.size(); }

  void require(std::size_t n, const char* what) const {
    if (remaining() < n) throw ParseError(std::string("truncated ") + what, pos_);
  }

  std::uint32_t read_u32_le(const char* what) {
    require(4, what);
    std::uint32_t v = load_u32_le(data_.data() + pos_);
    pos_ += 4;
    return v;
  }

  std::uint64_t read_u64_le(const char* what) {
    require(8, what);
    std::uint64_t v = load_u64_le(data_.data() + pos_);
    pos_ += 8;
    return v;
  }

  float read_f32_le(const char* what) {
    require(4, what);
    float v = load_f32_le(data_.data() + pos_);
    pos_ += 4;
    return v;
  }

  double read_f64_le(const char* what) {
    require(8, what);
    double v = load_f64_le(data_.data() + pos_);
    pos_ += 8;
    return v;
  }

  std::string_view read_bytes(std::size_t n, const char* what) {
    require(n, what);
    std::string_view v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace iwv
