#pragma once

#include <filesystem>
#include <string>

#include "mfbnn/types.hpp"

namespace mfbnn {

/// Header text plus a flat array of doubles. On disk:
///   8 bytes  magic "MFBNNBLB"
///   u32 LE   format version (1)
///   u64 LE   header byte length H
///   H bytes  UTF-8 JSON header
///   u64 LE   value count K
///   K x f64  IEEE-754 little-endian values
struct Blob {
  std::string header;
  Vector values;
};

void write_blob(const std::filesystem::path& path, const Blob& blob);
Blob read_blob(const std::filesystem::path& path);

}  // namespace mfbnn
