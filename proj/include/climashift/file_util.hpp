#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace climashift {

/// Writes to "<path>.tmp" then renames over `path`, so readers never see a
/// partially written file under its final name. Creates parent directories.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// FNV-1a 64 of a file's bytes.
std::uint64_t file_checksum(const std::filesystem::path& path);

/// 16 lowercase hex digits.
std::string checksum_hex(std::uint64_t value);
std::uint64_t parse_checksum_hex(std::string_view text);

}  // namespace climashift
