#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfseg/local_denoise.hpp"
#include "sfseg/tensor.hpp"

namespace sfseg {

// Per-class foreground/background mean feature vectors from easy samples.
// valid[c] requires at least one foreground AND one background pixel.
struct PrototypeSet {
    int num_classes = 0;
    int channels = 0;
    std::vector<float> f_obj;  // [num_classes * channels]
    std::vector<float> f_bck;
    std::vector<uint8_t> valid;
    std::vector<long> n_fg, n_bg;

    PrototypeSet() = default;
    PrototypeSet(int classes, int chans);
    float* obj(int c) { return f_obj.data() + static_cast<size_t>(c) * channels; }
    const float* obj(int c) const { return f_obj.data() + static_cast<size_t>(c) * channels; }
    float* bck(int c) { return f_bck.data() + static_cast<size_t>(c) * channels; }
    const float* bck(int c) const { return f_bck.data() + static_cast<size_t>(c) * channels; }
};

enum class AffinityMetric { cosine, neg_l2 };

struct PrototypeMask {
    Tensor mask;         // H x W x C2 binary
    Tensor affinity_fg;  // H x W x C2
    Tensor affinity_bg;
};

// Masked means over all given images; labels binarized at `binarize_threshold`.
// Classes with no foreground or no background stay invalid (never thrown).
PrototypeSet compute_prototypes(const std::vector<const Tensor*>& features,
                                const std::vector<const Tensor*>& labels,
                                float binarize_threshold);

// Larger = closer for both metrics: cosine similarity, or -||f - proto||_2.
double prototype_affinity(const float* feature, const float* prototype, int channels,
                          AffinityMetric metric);

// mask[p,c] = 1 iff affinity to f_obj[c] >= affinity to f_bck[c]; invalid
// classes yield an all-pass (all-ones) channel so fusion degrades to the
// local label.
PrototypeMask build_mask(const Tensor& features, const PrototypeSet& protos,
                         AffinityMetric metric);

// Trusted-foreground fusion: 1 iff binarized local label AND mask.
PseudoLabel fuse_pseudolabel(const PseudoLabel& local_label, const PrototypeMask& mask,
                             float binarize_threshold);

// EMA update per class; invalid batch classes carry `previous` forward.
// momentum 0 reproduces pure per-batch prototypes.
PrototypeSet update_prototypes_online(const PrototypeSet& previous,
                                      const PrototypeSet& batch_protos, float momentum);

AffinityMetric affinity_metric_from_name(const std::string& name);
std::string affinity_metric_name(AffinityMetric m);

}  // namespace sfseg
