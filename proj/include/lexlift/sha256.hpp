#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace lexlift {

/// Lowercase hex digest.
std::string sha256_hex(std::span<const std::byte> data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace lexlift
