#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace sfseg {

// Runs fn(i) for i in [0, n). Work is split across up to `threads` workers
// (0 = hardware concurrency). Each index is processed exactly once; callers
// must only write to per-index state so results are order-independent.
void parallel_for(int n, const std::function<void(int)>& fn, int threads = 0);

// ITU-R 601 luma from an RGB pixel in [0,1].
inline float luma601(float r, float g, float b) {
    return 0.299f * r + 0.587f * g + 0.114f * b;
}

// Write bytes to `path` via temp file + rename so readers never see a
// partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace sfseg
