#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sfseg/tensor.hpp"

namespace sfseg {

struct BinaryMask {
    int h = 0, w = 0;
    std::vector<uint8_t> values;  // {0,1}

    BinaryMask() = default;
    BinaryMask(int h_, int w_) : h(h_), w(w_), values(static_cast<size_t>(h_) * w_, 0) {}
    uint8_t& at(int y, int x) { return values[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return values[static_cast<size_t>(y) * w + x]; }
    long count() const;
};

// 2|a∩b| / (|a|+|b|); both masks empty -> 1, exactly one empty -> 0.
double dice(const BinaryMask& a, const BinaryMask& b);

// Symmetric average surface distance in pixels. Boundary = foreground pixel
// with at least one background 4-neighbor, the image border counting as
// background. Undefined (nullopt) when either mask is empty.
std::optional<double> asd(const BinaryMask& a, const BinaryMask& b);

// Boundary pixel coordinates (row, col) in row-major order.
std::vector<std::pair<int, int>> boundary_pixels(const BinaryMask& m);

// Per-channel thresholding of an HxWxC probability tensor; value >= threshold -> 1.
std::vector<BinaryMask> binarize(const Tensor& probs, float threshold = 0.5f);

BinaryMask mask_channel(const Tensor& mask, int channel, float threshold = 0.5f);

}  // namespace sfseg
