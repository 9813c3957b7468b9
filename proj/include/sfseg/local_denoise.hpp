#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfseg/dataset.hpp"
#include "sfseg/segmodel.hpp"
#include "sfseg/tensor.hpp"

namespace sfseg {

struct LocalCorrectionConfig {
    int neighborhood = 3;  // N, odd
    int top_k = 5;         // K
    bool include_center = true;

    void validate() const;
};

// Soft in [0,1] after local correction; binary {0,1} after fusion.
struct PseudoLabel {
    Tensor values;  // H x W x C2
    bool soft = true;
};

// u·v / (|u||v|); 0 when either norm is below 1e-12.
float cosine_similarity(const float* u, const float* v, int channels);

struct NeighborSim {
    int offset_index;  // row-major index into the N x N window
    int dy, dx;
    float sim;
};

// One entry per in-bounds offset of the N x N window centered at (row,col);
// the center participates iff include_center.
std::vector<NeighborSim> neighborhood_similarities(const Tensor& features, int row, int col,
                                                   const LocalCorrectionConfig& config);

// Mean label vector of the K most similar entries (ties broken by row-major
// offset order; fewer than K entries -> all of them).
std::vector<float> topk_correct_pixel(const Tensor& labels, const std::vector<NeighborSim>& sims,
                                      int row, int col, int top_k);

// Per-pixel TopK correction; every read uses the ORIGINAL labels.
PseudoLabel local_correct_image(const Tensor& features, const PseudoLabel& labels,
                                const LocalCorrectionConfig& config);

// ---- pseudo-label cache (magic "LGPL", float32 payload) ----

void write_label_cache(const std::filesystem::path& path, const Tensor& t);
Tensor read_label_cache(const std::filesystem::path& path);

struct CacheEntry {
    std::string id;
    std::string file;
    std::string sha256;
};

struct CacheManifest {
    LocalCorrectionConfig config;
    int num_passes = 0;
    uint64_t seed = 0;
    std::string model_hash;
    bool has_features = false;
    std::vector<CacheEntry> entries;
};

// MC-dropout inference + feature upsampling + local correction for every
// target image, written to out_dir. A complete, matching cache is reused;
// partial or stale caches are rebuilt.
CacheManifest build_pseudolabel_cache(const SegmentationModel& model,
                                      const std::vector<ImageSample>& target_set, int num_passes,
                                      const LocalCorrectionConfig& config,
                                      const std::filesystem::path& out_dir, uint64_t seed,
                                      bool store_features = false, int threads = 0);

CacheManifest read_cache_manifest(const std::filesystem::path& out_dir);

// Throws if the manifest does not cover exactly `ids` with intact files.
void verify_cache(const CacheManifest& manifest, const std::filesystem::path& dir,
                  const std::vector<std::string>& ids);

}  // namespace sfseg
