#include "sfseg/nn.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace sfseg {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

Conv2d::Conv2d(int in_c_, int out_c_, int k_, int stride_, int pad_)
    : in_c(in_c_),
      out_c(out_c_),
      k(k_),
      stride(stride_),
      pad(pad_),
      w(static_cast<size_t>(k_) * k_ * in_c_ * out_c_, 0.0f),
      b(out_c_, 0.0f) {}

void Conv2d::init_he(Rng& rng) {
    float std_dev = std::sqrt(2.0f / static_cast<float>(k * k * in_c));
    for (auto& v : w) v = std_dev * rng.normalf();
    for (auto& v : b) v = 0.0f;
}

namespace {

// Patch rows ordered (ky, kx, ic) to match the weight layout.
void im2col(const Tensor& in, int k, int stride, int pad, int oh, int ow, RowMat& patches) {
    const int K = k * k * in.c;
    patches.resize(static_cast<Eigen::Index>(oh) * ow, K);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float* row = patches.data() + (static_cast<size_t>(oy) * ow + ox) * K;
            int idx = 0;
            for (int ky = 0; ky < k; ++ky) {
                int sy = oy * stride + ky - pad;
                for (int kx = 0; kx < k; ++kx) {
                    int sx = ox * stride + kx - pad;
                    if (sy >= 0 && sy < in.h && sx >= 0 && sx < in.w) {
                        const float* px = in.pixel(sy, sx);
                        for (int ic = 0; ic < in.c; ++ic) row[idx++] = px[ic];
                    } else {
                        for (int ic = 0; ic < in.c; ++ic) row[idx++] = 0.0f;
                    }
                }
            }
        }
    }
}

void col2im(const RowMat& dpatches, int k, int stride, int pad, int oh, int ow, Tensor& din) {
    const int K = k * k * din.c;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* row = dpatches.data() + (static_cast<size_t>(oy) * ow + ox) * K;
            int idx = 0;
            for (int ky = 0; ky < k; ++ky) {
                int sy = oy * stride + ky - pad;
                for (int kx = 0; kx < k; ++kx) {
                    int sx = ox * stride + kx - pad;
                    if (sy >= 0 && sy < din.h && sx >= 0 && sx < din.w) {
                        float* px = din.pixel(sy, sx);
                        for (int ic = 0; ic < din.c; ++ic) px[ic] += row[idx++];
                    } else {
                        idx += din.c;
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& in) const {
    if (in.c != in_c) throw std::invalid_argument("conv: channel mismatch");
    const int oh = out_h(in.h), ow = out_w(in.w);
    Tensor out(oh, ow, out_c);
    RowMat patches;
    im2col(in, k, stride, pad, oh, ow, patches);
    MapConst W(w.data(), static_cast<Eigen::Index>(k) * k * in_c, out_c);
    MapMat O(out.data.data(), static_cast<Eigen::Index>(oh) * ow, out_c);
    O.noalias() = patches * W;
    MapConst B(b.data(), 1, out_c);
    O.rowwise() += B.row(0);
    return out;
}

Tensor Conv2d::backward(const Tensor& in, const Tensor& dout, std::vector<float>& dw,
                        std::vector<float>& db) const {
    const int oh = dout.h, ow = dout.w;
    const Eigen::Index K = static_cast<Eigen::Index>(k) * k * in_c;
    RowMat patches;
    im2col(in, k, stride, pad, oh, ow, patches);

    MapConst dO(dout.data.data(), static_cast<Eigen::Index>(oh) * ow, out_c);
    MapMat dW(dw.data(), K, out_c);
    dW.noalias() += patches.transpose() * dO;
    MapMat dB(db.data(), 1, out_c);
    dB.row(0) += dO.colwise().sum();

    MapConst W(w.data(), K, out_c);
    RowMat dpatches = dO * W.transpose();
    Tensor din(in.h, in.w, in.c);
    col2im(dpatches, k, stride, pad, oh, ow, din);
    return din;
}

void relu_inplace(Tensor& t) {
    for (auto& v : t.data)
        if (v < 0.0f) v = 0.0f;
}

void relu_backward_inplace(Tensor& g, const Tensor& activation) {
    for (size_t i = 0; i < g.data.size(); ++i)
        if (activation.data[i] <= 0.0f) g.data[i] = 0.0f;
}

Tensor upsample_bilinear(const Tensor& in, int out_h, int out_w) {
    if (out_h < in.h || out_w < in.w)
        throw std::invalid_argument("upsample: target smaller than source");
    if (out_h == in.h && out_w == in.w) return in;
    Tensor out(out_h, out_w, in.c);
    const float sy = out_h > 1 ? static_cast<float>(in.h - 1) / (out_h - 1) : 0.0f;
    const float sx = out_w > 1 ? static_cast<float>(in.w - 1) / (out_w - 1) : 0.0f;
    for (int y = 0; y < out_h; ++y) {
        float fy = y * sy;
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, in.h - 1);
        float wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            float fx = x * sx;
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, in.w - 1);
            float wx = fx - x0;
            const float* p00 = in.pixel(y0, x0);
            const float* p01 = in.pixel(y0, x1);
            const float* p10 = in.pixel(y1, x0);
            const float* p11 = in.pixel(y1, x1);
            float* o = out.pixel(y, x);
            for (int ch = 0; ch < in.c; ++ch)
                o[ch] = (1 - wy) * ((1 - wx) * p00[ch] + wx * p01[ch]) +
                        wy * ((1 - wx) * p10[ch] + wx * p11[ch]);
        }
    }
    return out;
}

Tensor upsample_bilinear_backward(const Tensor& dout, int in_h, int in_w) {
    if (dout.h == in_h && dout.w == in_w) return dout;
    Tensor din(in_h, in_w, dout.c);
    const float sy = dout.h > 1 ? static_cast<float>(in_h - 1) / (dout.h - 1) : 0.0f;
    const float sx = dout.w > 1 ? static_cast<float>(in_w - 1) / (dout.w - 1) : 0.0f;
    for (int y = 0; y < dout.h; ++y) {
        float fy = y * sy;
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, in_h - 1);
        float wy = fy - y0;
        for (int x = 0; x < dout.w; ++x) {
            float fx = x * sx;
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, in_w - 1);
            float wx = fx - x0;
            const float* g = dout.pixel(y, x);
            float* p00 = din.pixel(y0, x0);
            float* p01 = din.pixel(y0, x1);
            float* p10 = din.pixel(y1, x0);
            float* p11 = din.pixel(y1, x1);
            for (int ch = 0; ch < dout.c; ++ch) {
                p00[ch] += (1 - wy) * (1 - wx) * g[ch];
                p01[ch] += (1 - wy) * wx * g[ch];
                p10[ch] += wy * (1 - wx) * g[ch];
                p11[ch] += wy * wx * g[ch];
            }
        }
    }
    return din;
}

void sigmoid_inplace(Tensor& t) {
    for (auto& v : t.data) v = 1.0f / (1.0f + std::exp(-v));
}

}  // namespace sfseg
