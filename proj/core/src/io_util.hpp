#pragma once

// Little-endian binary IO helpers shared by the file formats. All multi-byte
// fields are serialized byte by byte so files are identical across hosts.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vrfp/errors.hpp"

namespace vrfp::detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f32(std::ostream& os, float v) {
  put_u32(os, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(const std::filesystem::path& path) : path_(path.string()), in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open " + path_);
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  void f32_array(float* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = f32();
  }

  void f64_array(double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = f64();
  }

  std::string str(std::size_t n) {
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  void expect_magic(const char* magic8) {
    std::string m = str(8);
    if (m != std::string(magic8, 8))
      throw FormatError(path_ + ": bad magic, expected " + std::string(magic8, 8));
  }

  void expect_eof() {
    char c;
    if (in_.read(&c, 1)) throw FormatError(path_ + ": trailing bytes after payload");
  }

  const std::string& path() const { return path_; }

 private:
  void bytes(void* dst, std::size_t n) {
    if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
      throw FormatError(path_ + ": truncated file");
  }

  std::string path_;
  std::ifstream in_;
};

class Writer {
 public:
  Writer(const std::filesystem::path& path, const char* magic8)
      : path_(path.string()), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw FormatError("cannot create " + path_);
    out_.write(magic8, 8);
  }

  void u32(std::uint32_t v) { put_u32(out_, v); }
  void u64(std::uint64_t v) { put_u64(out_, v); }
  void f32(float v) { put_f32(out_, v); }
  void f64(double v) { put_f64(out_, v); }

  void f32_array(const float* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f32(src[i]);
  }

  void f64_array(const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(src[i]);
  }

  void str(const std::string& s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

  void close() {
    out_.flush();
    if (!out_) throw FormatError(path_ + ": write failed");
    out_.close();
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace vrfp::detail
