#pragma once

#include <vector>

#include "sfseg/rng.hpp"
#include "sfseg/tensor.hpp"

namespace sfseg {

// 2D convolution, channel-last tensors. Weights are stored as a
// [k*k*in_c, out_c] row-major matrix so im2col output multiplies directly.
struct Conv2d {
    int in_c = 0, out_c = 0, k = 1, stride = 1, pad = 0;
    std::vector<float> w;
    std::vector<float> b;

    Conv2d() = default;
    Conv2d(int in_c_, int out_c_, int k_, int stride_, int pad_);

    void init_he(Rng& rng);
    int out_h(int in_h) const { return (in_h + 2 * pad - k) / stride + 1; }
    int out_w(int in_w) const { return (in_w + 2 * pad - k) / stride + 1; }

    Tensor forward(const Tensor& in) const;
    // Accumulates dW/db and returns dL/d(input).
    Tensor backward(const Tensor& in, const Tensor& dout, std::vector<float>& dw,
                    std::vector<float>& db) const;

    size_t weight_count() const { return w.size() + b.size(); }
};

void relu_inplace(Tensor& t);
// g *= (activation > 0), where `activation` is the post-ReLU tensor.
void relu_backward_inplace(Tensor& g, const Tensor& activation);

// Corner-aligned bilinear interpolation to (out_h, out_w).
Tensor upsample_bilinear(const Tensor& in, int out_h, int out_w);
// Transpose of the interpolation map.
Tensor upsample_bilinear_backward(const Tensor& dout, int in_h, int in_w);

void sigmoid_inplace(Tensor& t);

}  // namespace sfseg
