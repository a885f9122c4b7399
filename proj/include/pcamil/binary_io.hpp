#ifndef PCAMIL_BINARY_IO_HPP
#define PCAMIL_BINARY_IO_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "pcamil/error.hpp"

namespace pcamil::binary {

/// Little-endian byte sink. Values are encoded byte by byte so the output
/// does not depend on host endianness.
class Writer {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  const std::vector<char>& bytes() const { return bytes_; }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
  }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
  }

  std::vector<char> bytes_;
};

/// Bounds-checked little-endian reader over an in-memory file image.
class Reader {
 public:
  explicit Reader(std::vector<char> bytes, std::string source = {})
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  static Reader open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return Reader(std::move(bytes), path.string());
  }

  /// Consumes the 4-byte magic and the u32 version, checking both.
  void expect_header(std::string_view magic, std::uint32_t version) {
    if (remaining() < magic.size() ||
        std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0) {
      throw Error(ErrorCode::BadMagic, "'" + source_ + "' does not start with " + std::string(magic));
    }
    pos_ += magic.size();
    const auto v = u32();
    if (v != version) {
      throw Error(ErrorCode::VersionMismatch, "'" + source_ + "' has version " + std::to_string(v) +
                                                  ", expected " + std::to_string(version));
    }
  }

  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedPayload, "'" + source_ + "': " + std::string(what) + " needs " +
                                                   std::to_string(n) + " bytes, " +
                                                   std::to_string(remaining()) + " present");
    }
  }

  const std::string& source() const { return source_; }

 private:
  template <typename U>
  U get_le() {
    require(sizeof(U), "field");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace pcamil::binary

#endif  // PCAMIL_BINARY_IO_HPP
