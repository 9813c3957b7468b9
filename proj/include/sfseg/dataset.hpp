#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfseg/image_io.hpp"
#include "sfseg/rng.hpp"
#include "sfseg/tensor.hpp"

namespace sfseg {

enum class DomainTag { source, target };

// One image with optional two-channel label: channel 0 = cup, channel 1 = disc.
// Invariants: image values in [0,1]; mask values in {0,1}; cup=1 implies disc=1.
struct ImageSample {
    std::string id;
    Tensor image;  // H x W x 3
    std::optional<Tensor> mask;  // H x W x 2
    DomainTag domain = DomainTag::source;
};

// Photometric shift applied to target renders. Identity defaults.
struct ShiftParams {
    float intensity_scale = 1.0f;
    float contrast_gamma = 1.0f;
    float noise_sigma = 0.0f;
    float blur_radius = 0.0f;
    float texture_amp = 0.0f;
    bool is_identity() const;
};

struct SynthConfig {
    int image_size = 128;
    int n_source = 0;
    int n_target = 0;
    ShiftParams shift;
    uint64_t seed = 17;

    void validate() const;  // throws std::invalid_argument
};

// Named presets used by the CLI and the benchmarks: "none", "mild", "strong".
ShiftParams shift_preset(const std::string& name);

// Deterministic two-domain generator: nested-ellipse disc/cup scenes on a
// textured fundus-like background; target appearance shifted per config.
std::pair<std::vector<ImageSample>, std::vector<ImageSample>> generate_synthetic(
    const SynthConfig& config);

struct LoadResult {
    std::vector<ImageSample> samples;
    std::vector<std::string> warnings;
};

// Reads <dir>/images/*.png with optional <dir>/masks/<id>.png.
LoadResult load_dataset(const std::filesystem::path& dir, DomainTag tag = DomainTag::target);

void write_dataset(const std::filesystem::path& dir, const std::vector<ImageSample>& samples);

// Square crop of side `size`, window clamped inside the image bounds.
ImageSample crop_roi(const ImageSample& sample, int center_row, int center_col, int size);

// --- augmentation primitives (geometric ops transform image and mask with
// --- one shared map; photometric ops never touch the mask) ---
ImageSample flip_h(const ImageSample& s);
ImageSample flip_v(const ImageSample& s);
ImageSample rot90(const ImageSample& s, int quarter_turns);
ImageSample rotate_small(const ImageSample& s, float degrees);
ImageSample adjust_contrast(const ImageSample& s, float factor);
ImageSample add_noise(const ImageSample& s, float sigma, Rng& rng);
ImageSample random_erase(const ImageSample& s, Rng& rng);

// Random subset of the primitives above, driven entirely by `rng`.
ImageSample augment(const ImageSample& s, Rng& rng);

// --- mask encoding (8-bit gray: 0=background, 128=disc-only, 255=cup) ---
std::vector<uint8_t> encode_mask_gray(const Tensor& mask);
// Decodes gray palette masks, or RGB masks with R=cup, G=disc (both 0/255).
Tensor decode_mask(const PngData& png);
// Enforces cup ⊆ disc, returns the number of pixels changed.
int repair_nesting(Tensor& mask);

// Test/diagnostic helper: ranges, binary mask, nesting.
bool sample_invariants_hold(const ImageSample& s);

}  // namespace sfseg
