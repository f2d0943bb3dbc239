#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace skillsim {

// Little-endian binary readers/writers shared by the model file formats.
// Readers validate remaining size before every field and throw with a
// "truncated" message rather than reading garbage.

class BinWriter {
 public:
  explicit BinWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write file: " + path);
  }

  void magic(const char m[4]) { out_.write(m, 4); }
  void u32(std::uint32_t v) { write_le(&v, sizeof v); }
  void u64(std::uint64_t v) { write_le(&v, sizeof v); }
  void f32(float v) { write_le(&v, sizeof v); }
  void f64(double v) { write_le(&v, sizeof v); }

  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void f32_row(const float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f32(data[i]);
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed: " + path_);
  }

 private:
  void write_le(const void* p, std::size_t n) {
    // Host is little-endian on every supported target; a byte-order check
    // lives in the tests.
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }

  std::string path_;
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    buf_.assign(std::istreambuf_iterator<char>(in),
                std::istreambuf_iterator<char>());
  }

  void expect_magic(const char m[4]) {
    need(4, "magic");
    if (std::memcmp(buf_.data() + pos_, m, 4) != 0) {
      throw std::runtime_error(path_ + ": bad magic, expected \"" +
                               std::string(m, 4) + "\"");
    }
    pos_ += 4;
  }

  std::uint32_t u32() { return read_le<std::uint32_t>("u32"); }
  std::uint64_t u64() { return read_le<std::uint64_t>("u64"); }
  float f32() { return read_le<float>("f32"); }
  double f64() { return read_le<double>("f64"); }

  std::string str() {
    std::uint32_t n = u32();
    need(n, "string");
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  void f32_row(float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) data[i] = f32();
  }

  bool at_end() const { return pos_ == buf_.size(); }

  void expect_end() {
    if (!at_end()) {
      throw std::runtime_error(path_ + ": trailing bytes after payload");
    }
  }

 private:
  void need(std::size_t n, const char* what) {
    if (pos_ + n > buf_.size()) {
      throw std::runtime_error(path_ + ": truncated file (while reading " +
                               what + ")");
    }
  }

  template <typename T>
  T read_le(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string path_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

// FNV-1a, used for pipeline stage cache stamps.
std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_file(const std::string& path, std::uint64_t seed);

}  // namespace skillsim
