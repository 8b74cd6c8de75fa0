#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace proxyscat {

/// Writes to <path>.tmp and renames over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& data);
std::string read_file(const std::filesystem::path& path);

/// Little-endian binary packing.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void f64(double v);
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& data) : data_(data) {}
  std::uint32_t u32();
  double f64();
  void raw(char* p, std::size_t n);
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace proxyscat
