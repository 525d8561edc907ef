#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace archgen {

/// Writes content to path via a sibling temp file and rename, so readers never
/// observe a truncated file. Throws StorageError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Throws StorageError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace archgen
