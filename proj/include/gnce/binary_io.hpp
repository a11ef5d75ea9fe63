// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace gnce::io {

void write_u32(std::ostream& os, std::uint32_t v);
void write_f32(std::ostream& os, float v);
void write_f32(std::ostream& os, std::span<const float> v);

/// Readers throw DataError naming `what` on short reads.
std::uint32_t read_u32(std::istream& is, std::string_view what);
float read_f32(std::istream& is, std::string_view what);
void read_f32(std::istream& is, std::span<float> out, std::string_view what);

/// FNV-1a 64-bit hash; used for content checksums and checkpoint ids.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace gnce::io
