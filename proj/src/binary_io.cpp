// SPDX-License-Identifier: Apache-2.0
#include "gnce/binary_io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "gnce/error.hpp"

namespace gnce::io {
namespace {

std::array<char, 4> le_bytes(std::uint32_t v) {
  return {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
          static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
}

std::uint32_t from_le(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) {
  const auto b = le_bytes(v);
  os.write(b.data(), b.size());
}

void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }

void write_f32(std::ostream& os, std::span<const float> v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size_bytes()));
  } else {
    for (float x : v) write_f32(os, x);
  }
}

std::uint32_t read_u32(std::istream& is, std::string_view what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError("unexpected end of data while reading " + std::string(what));
  }
  return from_le(b);
}

float read_f32(std::istream& is, std::string_view what) {
  return std::bit_cast<float>(read_u32(is, what));
}

void read_f32(std::istream& is, std::span<float> out, std::string_view what) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(out.size_bytes()))) {
      throw DataError("unexpected end of data while reading " + std::string(what));
    }
  } else {
    for (float& x : out) x = read_f32(is, what);
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace gnce::io
