#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace sfseg {

// Dense float32 image tensor, channel-last H x W x C, row-major.
struct Tensor {
    int h = 0, w = 0, c = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int h_, int w_, int c_, float fill = 0.0f)
        : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {}

    float& at(int y, int x, int ch) {
        return data[(static_cast<size_t>(y) * w + x) * c + ch];
    }
    float at(int y, int x, int ch) const {
        return data[(static_cast<size_t>(y) * w + x) * c + ch];
    }

    // pointer to the channel vector of one pixel
    float* pixel(int y, int x) { return data.data() + (static_cast<size_t>(y) * w + x) * c; }
    const float* pixel(int y, int x) const {
        return data.data() + (static_cast<size_t>(y) * w + x) * c;
    }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }
    bool empty() const { return data.empty(); }
};

inline Tensor constant_like(const Tensor& t, float v) { return Tensor(t.h, t.w, t.c, v); }

}  // namespace sfseg
