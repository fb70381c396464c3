#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "prism/error.hpp"

namespace prism::io {

// All binary artifact files use little-endian fixed-width fields.
// Encoding is done byte-wise so the formats are identical on any host.

void write_u8(std::ostream& os, uint8_t v);
void write_u16(std::ostream& os, uint16_t v);
void write_u32(std::ostream& os, uint32_t v);
void write_u64(std::ostream& os, uint64_t v);
void write_f32(std::ostream& os, float v);
void write_string(std::ostream& os, const std::string& s); // u32 length + bytes

uint8_t read_u8(std::istream& is);
uint16_t read_u16(std::istream& is);
uint32_t read_u32(std::istream& is);
uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);
std::string read_string(std::istream& is);

void write_magic(std::ostream& os, const char magic[4]);
void expect_magic(std::istream& is, const char magic[4], const std::string& what);

// Writes to <path>.tmp then renames, so partially written files are never
// observed under the final name.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

std::string slurp_file(const std::filesystem::path& path);

// FNV-1a, used for cache keys.
uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull);
uint64_t fnv1a_str(const std::string& s, uint64_t h = 1469598103934665603ull);

} // namespace prism::io
