#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mobdemo {

/// Lowercase hex SHA-1 of a byte string.
std::string sha1_hex(std::string_view bytes);

/// Git-style blob digest: SHA-1 over "blob <size>\0" followed by the bytes.
std::string content_digest(std::string_view bytes);

/// content_digest() of a file's bytes; throws DataError("io_error").
std::string file_digest(const std::filesystem::path &path);

std::string read_file(const std::filesystem::path &path);

} // namespace mobdemo
