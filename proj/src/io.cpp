#include "proxyscat/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "proxyscat/errors.hpp"

namespace proxyscat {

void write_file_atomic(const std::filesystem::path& path, const std::string& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) {
  v = to_little(v);
  raw(reinterpret_cast<const char*>(&v), sizeof v);
}

void ByteWriter::f64(double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  bits = to_little(bits);
  raw(reinterpret_cast<const char*>(&bits), sizeof bits);
}

void ByteReader::raw(char* p, std::size_t n) {
  if (remaining() < n) throw Error("unexpected end of binary data");
  std::memcpy(p, data_.data() + pos_, n);
  pos_ += n;
}

std::uint32_t ByteReader::u32() {
  std::uint32_t v;
  raw(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

double ByteReader::f64() {
  std::uint64_t bits;
  raw(reinterpret_cast<char*>(&bits), sizeof bits);
  return std::bit_cast<double>(to_little(bits));
}

}  // namespace proxyscat
