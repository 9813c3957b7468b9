#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

namespace sfseg {

std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace sfseg
