#include "mfbnn/blob.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mfbnn/errors.hpp"

namespace mfbnn {
namespace {

constexpr std::array<char, 8> kMagic = {'M', 'F', 'B', 'N', 'N', 'B', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& os, T v) {
  std::array<unsigned char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& is, const std::filesystem::path& path) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw ConfigError("truncated blob: " + path.string());
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_blob(const std::filesystem::path& path, const Blob& blob) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint64_t>(os, blob.header.size());
  os.write(blob.header.data(), static_cast<std::streamsize>(blob.header.size()));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(blob.values.size()));
  for (Index i = 0; i < blob.values.size(); ++i) {
    std::uint64_t bits = 0;
    const double v = blob.values[i];
    std::memcpy(&bits, &v, sizeof bits);
    put_le<std::uint64_t>(os, bits);
  }
  if (!os) throw ConfigError("write failed: " + path.string());
}

Blob read_blob(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw ConfigError("not a blob file: " + path.string());
  if (get_le<std::uint32_t>(is, path) != kVersion) throw ConfigError("unsupported blob version: " + path.string());
  const auto header_len = get_le<std::uint64_t>(is, path);
  Blob blob;
  blob.header.resize(header_len);
  if (!is.read(blob.header.data(), static_cast<std::streamsize>(header_len)))
    throw ConfigError("truncated blob header: " + path.string());
  const auto count = get_le<std::uint64_t>(is, path);
  blob.values.resize(static_cast<Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto bits = get_le<std::uint64_t>(is, path);
    double v = 0;
    std::memcpy(&v, &bits, sizeof v);
    blob.values[static_cast<Index>(i)] = v;
  }
  return blob;
}

}  // namespace mfbnn
