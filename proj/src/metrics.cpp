#include "sfseg/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sfseg {

long BinaryMask::count() const {
    long n = 0;
    for (uint8_t v : values) n += v;
    return n;
}

double dice(const BinaryMask& a, const BinaryMask& b) {
    if (a.h != b.h || a.w != b.w) throw std::invalid_argument("dice: shape mismatch");
    long na = 0, nb = 0, inter = 0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        na += a.values[i];
        nb += b.values[i];
        inter += (a.values[i] & b.values[i]);
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

std::vector<std::pair<int, int>> boundary_pixels(const BinaryMask& m) {
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < m.h; ++y) {
        for (int x = 0; x < m.w; ++x) {
            if (!m.at(y, x)) continue;
            bool edge = (y == 0 || x == 0 || y == m.h - 1 || x == m.w - 1) ||
                        !m.at(y - 1, x) || !m.at(y + 1, x) || !m.at(y, x - 1) || !m.at(y, x + 1);
            if (edge) out.emplace_back(y, x);
        }
    }
    return out;
}

namespace {

double directed_mean_distance(const std::vector<std::pair<int, int>>& from,
                              const std::vector<std::pair<int, int>>& to) {
    double total = 0.0;
    for (const auto& [y, x] : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [ty, tx] : to) {
            double dy = y - ty, dx = x - tx;
            double d2 = dy * dy + dx * dx;
            if (d2 < best) best = d2;
        }
        total += std::sqrt(best);
    }
    return total / static_cast<double>(from.size());
}

}  // namespace

std::optional<double> asd(const BinaryMask& a, const BinaryMask& b) {
    if (a.h != b.h || a.w != b.w) throw std::invalid_argument("asd: shape mismatch");
    auto ba = boundary_pixels(a);
    auto bb = boundary_pixels(b);
    if (ba.empty() || bb.empty()) return std::nullopt;
    return 0.5 * (directed_mean_distance(ba, bb) + directed_mean_distance(bb, ba));
}

std::vector<BinaryMask> binarize(const Tensor& probs, float threshold) {
    std::vector<BinaryMask> out;
    out.reserve(probs.c);
    for (int ch = 0; ch < probs.c; ++ch) out.push_back(mask_channel(probs, ch, threshold));
    return out;
}

BinaryMask mask_channel(const Tensor& mask, int channel, float threshold) {
    BinaryMask m(mask.h, mask.w);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x)
            m.at(y, x) = mask.at(y, x, channel) >= threshold ? 1 : 0;
    return m;
}

}  // namespace sfseg
