#include "sfseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sfseg {

namespace {

constexpr float kPi = 3.14159265358979323846f;

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

inline float smoothstep(float e0, float e1, float x) {
    float t = clamp01((x - e0) / (e1 - e0));
    return t * t * (3.0f - 2.0f * t);
}

struct Ellipse {
    float cy, cx;     // center, pixels
    float ry, rx;     // semi-axes, pixels
    float rot;        // radians
    // normalized radial coordinate: <= 1 inside
    float radial(float y, float x) const {
        float dy = y - cy, dx = x - cx;
        float c = std::cos(rot), s = std::sin(rot);
        float u = c * dx + s * dy;
        float v = -s * dx + c * dy;
        float q = (u / rx) * (u / rx) + (v / ry) * (v / ry);
        return std::sqrt(q);
    }
};

// A handful of random sinusoids; smooth, cheap, fully determined by rng.
struct TextureField {
    struct Wave {
        float fy, fx, phase, amp;
    };
    std::vector<Wave> waves;

    static TextureField make(Rng& rng, int n, float min_cycles, float max_cycles, int size) {
        TextureField f;
        f.waves.reserve(n);
        for (int i = 0; i < n; ++i) {
            float cycles = static_cast<float>(rng.uniform(min_cycles, max_cycles));
            float dir = static_cast<float>(rng.uniform(0.0, 2.0 * kPi));
            Wave w;
            w.fy = cycles * std::sin(dir) / static_cast<float>(size);
            w.fx = cycles * std::cos(dir) / static_cast<float>(size);
            w.phase = static_cast<float>(rng.uniform(0.0, 2.0 * kPi));
            w.amp = static_cast<float>(rng.uniform(0.5, 1.0)) / static_cast<float>(n);
            f.waves.push_back(w);
        }
        return f;
    }

    float at(float y, float x) const {
        float v = 0.0f;
        for (const auto& w : waves)
            v += w.amp * std::sin(2.0f * kPi * (w.fy * y + w.fx * x) + w.phase);
        return v;
    }
};

struct Scene {
    Ellipse disc, cup;
    float bg[3], disc_color[3], cup_color[3];
    TextureField coarse, fine;
    float tex_amp;
    float grad_dir, grad_amp;
};

Scene sample_scene(Rng& rng, int size) {
    Scene sc;
    float s = static_cast<float>(size);
    sc.disc.cy = s * static_cast<float>(rng.uniform(0.38, 0.62));
    sc.disc.cx = s * static_cast<float>(rng.uniform(0.38, 0.62));
    sc.disc.ry = s * static_cast<float>(rng.uniform(0.16, 0.26));
    sc.disc.rx = s * static_cast<float>(rng.uniform(0.16, 0.26));
    sc.disc.rot = static_cast<float>(rng.uniform(0.0, kPi));

    // Cup strictly inside: same orientation, scaled axes, offset bounded so
    // that offset + cup radius < disc radius along both principal axes.
    float scale = static_cast<float>(rng.uniform(0.40, 0.62));
    sc.cup = sc.disc;
    sc.cup.ry = sc.disc.ry * scale;
    sc.cup.rx = sc.disc.rx * scale;
    float margin = 0.8f * (1.0f - scale);
    float off_u = sc.disc.rx * margin * static_cast<float>(rng.uniform(-0.5, 0.5));
    float off_v = sc.disc.ry * margin * static_cast<float>(rng.uniform(-0.5, 0.5));
    float c = std::cos(sc.disc.rot), sn = std::sin(sc.disc.rot);
    sc.cup.cx += c * off_u - sn * off_v;
    sc.cup.cy += sn * off_u + c * off_v;

    const float bg_base[3] = {0.58f, 0.33f, 0.18f};
    const float disc_base[3] = {0.88f, 0.72f, 0.44f};
    const float cup_base[3] = {0.97f, 0.90f, 0.62f};
    for (int k = 0; k < 3; ++k) {
        sc.bg[k] = bg_base[k] + static_cast<float>(rng.uniform(-0.05, 0.05));
        sc.disc_color[k] = disc_base[k] + static_cast<float>(rng.uniform(-0.05, 0.05));
        sc.cup_color[k] = cup_base[k] + static_cast<float>(rng.uniform(-0.03, 0.03));
    }
    sc.coarse = TextureField::make(rng, 4, 1.5f, 5.0f, size);
    sc.fine = TextureField::make(rng, 4, 8.0f, 20.0f, size);
    sc.tex_amp = static_cast<float>(rng.uniform(0.03, 0.07));
    sc.grad_dir = static_cast<float>(rng.uniform(0.0, 2.0 * kPi));
    sc.grad_amp = static_cast<float>(rng.uniform(0.0, 0.08));
    return sc;
}

Tensor render_scene(const Scene& sc, int size) {
    Tensor img(size, size, 3);
    float gy = std::sin(sc.grad_dir), gx = std::cos(sc.grad_dir);
    const float edge = 1.5f;  // soft edge width in pixels, scaled by radius below
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            float fy = static_cast<float>(y), fx = static_cast<float>(x);
            float tex = sc.coarse.at(fy, fx) * sc.tex_amp;
            float grad = sc.grad_amp * ((gy * fy + gx * fx) / static_cast<float>(size) - 0.5f);
            float rd = sc.disc.radial(fy, fx);
            float rc = sc.cup.radial(fy, fx);
            float ad = smoothstep(1.0f + edge / sc.disc.rx, 1.0f - edge / sc.disc.rx, rd);
            float ac = smoothstep(1.0f + edge / sc.cup.rx, 1.0f - edge / sc.cup.rx, rc);
            for (int k = 0; k < 3; ++k) {
                float v = sc.bg[k] + tex + grad;
                v = v + ad * (sc.disc_color[k] + 0.5f * tex - v);
                v = v + ac * (sc.cup_color[k] - v);
                img.at(y, x, k) = clamp01(v);
            }
        }
    }
    return img;
}

Tensor rasterize_mask(const Scene& sc, int size) {
    Tensor mask(size, size, 2);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            float fy = static_cast<float>(y), fx = static_cast<float>(x);
            float disc_in = sc.disc.radial(fy, fx) <= 1.0f ? 1.0f : 0.0f;
            float cup_in = sc.cup.radial(fy, fx) <= 1.0f ? 1.0f : 0.0f;
            mask.at(y, x, 0) = cup_in * disc_in;  // construction keeps cup inside anyway
            mask.at(y, x, 1) = disc_in;
        }
    }
    return mask;
}

Tensor gaussian_blur(const Tensor& img, float sigma) {
    if (sigma < 1e-6f) return img;
    int radius = std::max(1, static_cast<int>(std::ceil(3.0f * sigma)));
    std::vector<float> kernel(2 * radius + 1);
    float sum = 0.0f;
    for (int i = -radius; i <= radius; ++i) {
        float v = std::exp(-0.5f * (i * i) / (sigma * sigma));
        kernel[i + radius] = v;
        sum += v;
    }
    for (auto& v : kernel) v /= sum;

    Tensor tmp(img.h, img.w, img.c), out(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i) {
                    int xx = std::clamp(x + i, 0, img.w - 1);
                    acc += kernel[i + radius] * img.at(y, xx, ch);
                }
                tmp.at(y, x, ch) = acc;
            }
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i) {
                    int yy = std::clamp(y + i, 0, img.h - 1);
                    acc += kernel[i + radius] * tmp.at(yy, x, ch);
                }
                out.at(y, x, ch) = acc;
            }
    return out;
}

// Bright lesion-like spots; scattered structured artifacts the target
// domain has and the source domain lacks.
struct BlobField {
    struct Blob {
        float cy, cx, inv_2s2, amp;
    };
    std::vector<Blob> blobs;

    static BlobField make(Rng& rng, int count, int size) {
        BlobField f;
        f.blobs.reserve(count);
        for (int i = 0; i < count; ++i) {
            Blob b;
            b.cy = static_cast<float>(rng.uniform(0.0, size));
            b.cx = static_cast<float>(rng.uniform(0.0, size));
            float sigma = static_cast<float>(rng.uniform(2.0, 5.0));
            b.inv_2s2 = 1.0f / (2.0f * sigma * sigma);
            b.amp = static_cast<float>(rng.uniform(0.25, 0.5));
            f.blobs.push_back(b);
        }
        return f;
    }

    float at(float y, float x) const {
        float v = 0.0f;
        for (const auto& b : blobs) {
            float dy = y - b.cy, dx = x - b.cx;
            v += b.amp * std::exp(-(dy * dy + dx * dx) * b.inv_2s2);
        }
        return v;
    }
};

Tensor apply_shift(const Tensor& img, const ShiftParams& p, const Scene& sc, Rng& rng) {
    Tensor out = img;
    for (size_t i = 0; i < out.size(); ++i) {
        float v = out.data[i] * p.intensity_scale;
        v = std::pow(clamp01(v), p.contrast_gamma);
        out.data[i] = v;
    }
    if (p.texture_amp > 0.0f) {
        int n_blobs = static_cast<int>(std::lround(8.0f * p.texture_amp));
        BlobField blobs = BlobField::make(rng, n_blobs, out.h);
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) {
                float fy = static_cast<float>(y), fx = static_cast<float>(x);
                float t = p.texture_amp * 0.5f * sc.fine.at(fy, fx) + blobs.at(fy, fx);
                for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) += t;
            }
    }
    out = gaussian_blur(out, p.blur_radius);
    for (size_t i = 0; i < out.size(); ++i) {
        float v = out.data[i];
        if (p.noise_sigma > 0.0f) v += p.noise_sigma * rng.normalf();
        out.data[i] = clamp01(v);
    }
    return out;
}

std::string format_id(const char* prefix, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04d", prefix, index);
    return buf;
}

}  // namespace

bool ShiftParams::is_identity() const {
    return intensity_scale == 1.0f && contrast_gamma == 1.0f && noise_sigma == 0.0f &&
           blur_radius == 0.0f && texture_amp == 0.0f;
}

void SynthConfig::validate() const {
    if (image_size < 32) throw std::invalid_argument("image_size must be >= 32");
    if (n_source < 0 || n_target < 0) throw std::invalid_argument("negative sample count");
    if (shift.noise_sigma < 0.0f) throw std::invalid_argument("noise_sigma must be >= 0");
    if (shift.blur_radius < 0.0f) throw std::invalid_argument("blur_radius must be >= 0");
    if (shift.intensity_scale <= 0.0f) throw std::invalid_argument("intensity_scale must be > 0");
    if (shift.contrast_gamma <= 0.0f) throw std::invalid_argument("contrast_gamma must be > 0");
}

ShiftParams shift_preset(const std::string& name) {
    if (name == "none" || name.empty()) return ShiftParams{};
    if (name == "mild") return ShiftParams{1.05f, 0.92f, 0.02f, 0.4f, 0.5f};
    if (name == "strong") return ShiftParams{1.10f, 0.85f, 0.04f, 0.5f, 1.0f};
    throw std::invalid_argument("unknown shift preset: " + name);
}

std::pair<std::vector<ImageSample>, std::vector<ImageSample>> generate_synthetic(
    const SynthConfig& config) {
    config.validate();
    Rng base(config.seed);
    std::vector<ImageSample> source, target;
    source.reserve(config.n_source);
    target.reserve(config.n_target);

    for (int i = 0; i < config.n_source; ++i) {
        Rng rng = base.fork(0x500000ULL + static_cast<uint64_t>(i));
        Scene sc = sample_scene(rng, config.image_size);
        ImageSample s;
        s.id = format_id("src", i);
        s.image = render_scene(sc, config.image_size);
        s.mask = rasterize_mask(sc, config.image_size);
        s.domain = DomainTag::source;
        source.push_back(std::move(s));
    }
    for (int i = 0; i < config.n_target; ++i) {
        Rng rng = base.fork(0x700000ULL + static_cast<uint64_t>(i));
        Scene sc = sample_scene(rng, config.image_size);
        ImageSample s;
        s.id = format_id("tgt", i);
        Tensor rendered = render_scene(sc, config.image_size);
        s.image = apply_shift(rendered, config.shift, sc, rng);
        s.mask = rasterize_mask(sc, config.image_size);
        s.domain = DomainTag::target;
        target.push_back(std::move(s));
    }
    return {std::move(source), std::move(target)};
}

// ---------------------------------------------------------------- mask codec

std::vector<uint8_t> encode_mask_gray(const Tensor& mask) {
    if (mask.c != 2) throw std::invalid_argument("mask must have 2 channels");
    std::vector<uint8_t> out(static_cast<size_t>(mask.h) * mask.w);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            bool cup = mask.at(y, x, 0) >= 0.5f;
            bool disc = mask.at(y, x, 1) >= 0.5f;
            out[static_cast<size_t>(y) * mask.w + x] = cup ? 255 : (disc ? 128 : 0);
        }
    return out;
}

Tensor decode_mask(const PngData& png) {
    Tensor mask(png.h, png.w, 2);
    if (png.channels == 1) {
        for (int i = 0; i < png.h * png.w; ++i) {
            uint8_t v = png.bytes[i];
            float cup, disc;
            if (v == 0) {
                cup = 0.0f;
                disc = 0.0f;
            } else if (v == 128) {
                cup = 0.0f;
                disc = 1.0f;
            } else if (v == 255) {
                cup = 1.0f;
                disc = 1.0f;
            } else {
                throw std::runtime_error("unknown mask palette value " + std::to_string(int(v)));
            }
            mask.data[2 * i + 0] = cup;
            mask.data[2 * i + 1] = disc;
        }
    } else if (png.channels == 3) {
        // Two-channel form: R = cup, G = disc, B unused; values must be 0/255.
        for (int i = 0; i < png.h * png.w; ++i) {
            uint8_t r = png.bytes[3 * i], g = png.bytes[3 * i + 1], b = png.bytes[3 * i + 2];
            if ((r != 0 && r != 255) || (g != 0 && g != 255) || b != 0)
                throw std::runtime_error("unknown mask palette value (rgb)");
            mask.data[2 * i + 0] = r == 255 ? 1.0f : 0.0f;
            mask.data[2 * i + 1] = g == 255 ? 1.0f : 0.0f;
        }
    } else {
        throw std::runtime_error("unsupported mask channel count");
    }
    return mask;
}

int repair_nesting(Tensor& mask) {
    int changed = 0;
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x)
            if (mask.at(y, x, 0) >= 0.5f && mask.at(y, x, 1) < 0.5f) {
                mask.at(y, x, 1) = 1.0f;
                ++changed;
            }
    return changed;
}

// ------------------------------------------------------------------- file IO

LoadResult load_dataset(const std::filesystem::path& dir, DomainTag tag) {
    namespace fs = std::filesystem;
    LoadResult result;
    fs::path images = dir / "images";
    fs::path masks = dir / "masks";
    if (!fs::is_directory(images))
        throw std::runtime_error("dataset has no images/ directory: " + dir.string());

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(images))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    for (const auto& f : files) {
        ImageSample s;
        s.id = f.stem().string();
        s.domain = tag;
        PngData png = read_png(f);
        if (png.channels == 1) {
            // promote gray to rgb
            Tensor g = png_to_tensor(png);
            Tensor rgb(g.h, g.w, 3);
            for (int y = 0; y < g.h; ++y)
                for (int x = 0; x < g.w; ++x)
                    for (int k = 0; k < 3; ++k) rgb.at(y, x, k) = g.at(y, x, 0);
            s.image = std::move(rgb);
        } else {
            s.image = png_to_tensor(png);
        }
        fs::path mask_file = masks / (s.id + ".png");
        if (fs::exists(mask_file)) {
            Tensor mask = decode_mask(read_png(mask_file));
            if (mask.h != s.image.h || mask.w != s.image.w)
                throw std::runtime_error("mask size mismatch for " + s.id);
            int repaired = repair_nesting(mask);
            if (repaired > 0)
                result.warnings.push_back("repaired nesting for " + s.id + " (" +
                                          std::to_string(repaired) + " px: disc |= cup)");
            s.mask = std::move(mask);
        }
        result.samples.push_back(std::move(s));
    }
    return result;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<ImageSample>& samples) {
    for (const auto& s : samples) {
        write_png_rgb(dir / "images" / (s.id + ".png"), s.image);
        if (s.mask) write_png_gray(dir / "masks" / (s.id + ".png"), s.mask->h, s.mask->w,
                                   encode_mask_gray(*s.mask));
    }
}

// ------------------------------------------------------------------ geometry

ImageSample crop_roi(const ImageSample& sample, int center_row, int center_col, int size) {
    const Tensor& img = sample.image;
    if (size > img.h || size > img.w) throw std::invalid_argument("crop size exceeds image");
    int top = std::clamp(center_row - size / 2, 0, img.h - size);
    int left = std::clamp(center_col - size / 2, 0, img.w - size);

    auto crop = [&](const Tensor& t) {
        Tensor out(size, size, t.c);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int ch = 0; ch < t.c; ++ch) out.at(y, x, ch) = t.at(top + y, left + x, ch);
        return out;
    };

    ImageSample out;
    out.id = sample.id;
    out.domain = sample.domain;
    out.image = crop(img);
    if (sample.mask) out.mask = crop(*sample.mask);
    return out;
}

namespace {

template <typename MapFn>
ImageSample remap_indices(const ImageSample& s, MapFn&& src_of_dst, int oh, int ow) {
    ImageSample out;
    out.id = s.id;
    out.domain = s.domain;
    out.image = Tensor(oh, ow, s.image.c);
    if (s.mask) out.mask = Tensor(oh, ow, s.mask->c);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            auto [sy, sx] = src_of_dst(y, x);
            for (int ch = 0; ch < s.image.c; ++ch)
                out.image.at(y, x, ch) = s.image.at(sy, sx, ch);
            if (s.mask)
                for (int ch = 0; ch < s.mask->c; ++ch)
                    out.mask->at(y, x, ch) = s.mask->at(sy, sx, ch);
        }
    return out;
}

}  // namespace

ImageSample flip_h(const ImageSample& s) {
    int w = s.image.w;
    return remap_indices(
        s, [w](int y, int x) { return std::pair<int, int>(y, w - 1 - x); }, s.image.h, w);
}

ImageSample flip_v(const ImageSample& s) {
    int h = s.image.h;
    return remap_indices(
        s, [h](int y, int x) { return std::pair<int, int>(h - 1 - y, x); }, h, s.image.w);
}

ImageSample rot90(const ImageSample& s, int quarter_turns) {
    int k = ((quarter_turns % 4) + 4) % 4;
    if (k == 0) return s;
    int h = s.image.h, w = s.image.w;
    // 90° CCW: dst(y,x) = src(x, W-1-y) applied k times
    switch (k) {
        case 1:
            return remap_indices(
                s, [w](int y, int x) { return std::pair<int, int>(x, w - 1 - y); }, w, h);
        case 2:
            return remap_indices(
                s, [h, w](int y, int x) { return std::pair<int, int>(h - 1 - y, w - 1 - x); }, h,
                w);
        default:
            return remap_indices(
                s, [h](int y, int x) { return std::pair<int, int>(h - 1 - x, y); }, w, h);
    }
}

ImageSample rotate_small(const ImageSample& s, float degrees) {
    float rad = degrees * kPi / 180.0f;
    float c = std::cos(rad), sn = std::sin(rad);
    float cy = (s.image.h - 1) * 0.5f, cx = (s.image.w - 1) * 0.5f;
    int h = s.image.h, w = s.image.w;

    ImageSample out;
    out.id = s.id;
    out.domain = s.domain;
    out.image = Tensor(h, w, s.image.c);
    if (s.mask) out.mask = Tensor(h, w, s.mask->c);

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // inverse map: rotate destination back into source coordinates
            float dy = y - cy, dx = x - cx;
            float sy = c * dy + sn * dx + cy;
            float sx = -sn * dy + c * dx + cx;

            // image: bilinear with clamp-to-edge
            float fy = std::clamp(sy, 0.0f, static_cast<float>(h - 1));
            float fx = std::clamp(sx, 0.0f, static_cast<float>(w - 1));
            int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
            int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
            float wy = fy - y0, wx = fx - x0;
            for (int ch = 0; ch < s.image.c; ++ch) {
                float v00 = s.image.at(y0, x0, ch), v01 = s.image.at(y0, x1, ch);
                float v10 = s.image.at(y1, x0, ch), v11 = s.image.at(y1, x1, ch);
                out.image.at(y, x, ch) =
                    (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
            }

            // mask: nearest neighbor, out of bounds = background
            if (s.mask) {
                int ny = static_cast<int>(std::lround(sy));
                int nx = static_cast<int>(std::lround(sx));
                for (int ch = 0; ch < s.mask->c; ++ch)
                    out.mask->at(y, x, ch) = (ny >= 0 && ny < h && nx >= 0 && nx < w)
                                                 ? s.mask->at(ny, nx, ch)
                                                 : 0.0f;
            }
        }
    return out;
}

ImageSample adjust_contrast(const ImageSample& s, float factor) {
    ImageSample out = s;
    for (auto& v : out.image.data) v = clamp01((v - 0.5f) * factor + 0.5f);
    return out;
}

ImageSample add_noise(const ImageSample& s, float sigma, Rng& rng) {
    ImageSample out = s;
    for (auto& v : out.image.data) v = clamp01(v + sigma * rng.normalf());
    return out;
}

ImageSample random_erase(const ImageSample& s, Rng& rng) {
    ImageSample out = s;
    int h = s.image.h, w = s.image.w;
    int eh = std::max(1, static_cast<int>(h * rng.uniform(0.05, 0.25)));
    int ew = std::max(1, static_cast<int>(w * rng.uniform(0.05, 0.25)));
    int top = rng.uniform_int(0, h - eh);
    int left = rng.uniform_int(0, w - ew);
    for (int y = top; y < top + eh; ++y)
        for (int x = left; x < left + ew; ++x)
            for (int ch = 0; ch < 3; ++ch)
                out.image.at(y, x, ch) = static_cast<float>(rng.uniform());
    return out;
}

ImageSample augment(const ImageSample& s, Rng& rng) {
    ImageSample out = s;
    int k = rng.uniform_int(0, 3);
    if (k != 0) out = rot90(out, k);
    if (rng.bernoulli(0.5)) out = flip_h(out);
    if (rng.bernoulli(0.5)) out = flip_v(out);
    if (rng.bernoulli(0.5))
        out = rotate_small(out, static_cast<float>(rng.uniform(-10.0, 10.0)));
    if (rng.bernoulli(0.5))
        out = adjust_contrast(out, static_cast<float>(rng.uniform(0.75, 1.25)));
    if (rng.bernoulli(0.5)) out = add_noise(out, static_cast<float>(rng.uniform(0.0, 0.03)), rng);
    if (rng.bernoulli(0.3)) out = random_erase(out, rng);
    return out;
}

bool sample_invariants_hold(const ImageSample& s) {
    for (float v : s.image.data)
        if (!(v >= 0.0f && v <= 1.0f)) return false;
    if (s.mask) {
        if (s.mask->c != 2) return false;
        for (float v : s.mask->data)
            if (v != 0.0f && v != 1.0f) return false;
        for (int y = 0; y < s.mask->h; ++y)
            for (int x = 0; x < s.mask->w; ++x)
                if (s.mask->at(y, x, 0) > s.mask->at(y, x, 1)) return false;
    }
    return true;
}

}  // namespace sfseg
