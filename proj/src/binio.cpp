#include "binio.hpp"

#include <fstream>
#include <sstream>

#include "drmn/error.hpp"

namespace drmn::binio {

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& file, const std::string& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "short write to " + file.string());
}

std::uint64_t Reader::get(int n) {
  if (data_.size() - pos_ < static_cast<std::size_t>(n)) fail(Errc::format, what_ + ": truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t{static_cast<unsigned char>(data_[pos_ + i])} << (8 * i);
  pos_ += static_cast<std::size_t>(n);
  return v;
}

std::string_view Reader::bytes(std::size_t n) {
  if (data_.size() - pos_ < n) fail(Errc::format, what_ + ": truncated");
  const auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string Reader::str() {
  const std::uint64_t n = u64();
  return std::string(bytes(static_cast<std::size_t>(n)));
}

}  // namespace drmn::binio
