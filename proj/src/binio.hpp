#pragma once
// Little-endian byte encoding and whole-file I/O shared by the binary formats.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace drmn::binio {

std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, const std::string& bytes);

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::string_view s) { out_.append(s); }
  /// u64 length followed by the raw bytes.
  void str(std::string_view s) {
    u64(s.size());
    bytes(s);
  }
  const std::string& data() const noexcept { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

/// Bounds-checked reader; running past the end raises a format error
/// mentioning `what`.
class Reader {
 public:
  Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string_view bytes(std::size_t n);
  std::string str();
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  std::uint64_t get(int n);
  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace drmn::binio
