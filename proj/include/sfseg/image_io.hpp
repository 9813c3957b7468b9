#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sfseg/tensor.hpp"

namespace sfseg {

// Raw 8-bit PNG payload; channels is 1 (gray) or 3 (RGB) or 4 (RGBA).
struct PngData {
    int h = 0, w = 0, channels = 0;
    std::vector<uint8_t> bytes;  // row-major, interleaved
};

// Reads a PNG in its natural colorspace: grayscale files come back with
// channels==1, everything else as RGB (alpha dropped).
PngData read_png(const std::filesystem::path& path);

// 8-bit RGB image from a [0,1] float tensor (values clamped, rounded).
void write_png_rgb(const std::filesystem::path& path, const Tensor& image);

void write_png_gray(const std::filesystem::path& path, int h, int w,
                    const std::vector<uint8_t>& bytes);

void write_png_rgba(const std::filesystem::path& path, int h, int w,
                    const std::vector<uint8_t>& bytes);

// Tensor in [0,1] from 8-bit payload (any channel count kept as-is).
Tensor png_to_tensor(const PngData& png);

}  // namespace sfseg
