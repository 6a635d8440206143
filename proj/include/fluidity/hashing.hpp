#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fluidity {

// Lowercase hex SHA-256 digest of `data`.
std::string sha256_hex(std::string_view data);

// SHA-256 of a file's bytes. Throws ValidationError when unreadable.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace fluidity
