#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sfseg/nn.hpp"
#include "sfseg/rng.hpp"
#include "sfseg/tensor.hpp"

namespace sfseg {

struct ModelConfig {
    int feature_channels = 64;  // C1
    int num_classes = 2;        // C2
    float dropout_rate = 0.3f;
};

struct ModelOutput {
    Tensor features;  // h1 x w1 x C1 (penultimate decoder stage)
    Tensor probs;     // H x W x C2, per-channel sigmoid
};

// Everything the backward pass needs from one forward evaluation.
struct ForwardStash {
    Tensor input;
    Tensor a1, a2, a3;            // encoder activations (post-ReLU)
    Tensor a3d;                   // post-dropout
    std::vector<float> drop_scale;  // per-element 0 or 1/(1-rate); empty = identity
    Tensor d1, d2;                // decoder activations; d2 is the feature map
    Tensor logits;                // h1 x w1 x C2
    Tensor uplogits;              // H x W x C2
    Tensor probs;
};

// Flat gradient buffer matching SegmentationModel::blocks() order.
struct ModelGrads {
    std::vector<std::vector<float>> g;
    void zero();
    void add(const ModelGrads& other);
    void scale(float s);
};

// Reference desk-scale encoder/decoder: 3 conv stages (stride 4 total),
// dropout before the decoder, 2 decoder stages, 1x1 head, sigmoid output
// upsampled bilinearly to input resolution.
class SegmentationModel {
public:
    SegmentationModel() = default;

    static SegmentationModel make_reference(const ModelConfig& config, uint64_t init_seed);

    ModelOutput forward(const Tensor& image, bool dropout_enabled, Rng& rng) const;
    ForwardStash forward_train(const Tensor& image, bool dropout_enabled, Rng& rng) const;

    // d_uplogits: dL/d(logits upsampled to full resolution), H x W x C2.
    void backward(const ForwardStash& stash, const Tensor& d_uplogits, ModelGrads& grads) const;

    int stride() const { return 4; }
    const ModelConfig& config() const { return config_; }
    size_t param_count() const;

    struct Block {
        float* data;
        size_t n;
    };
    std::vector<Block> blocks();
    std::vector<Block> blocks() const;  // const variant (data still mutable via cast-free copy)
    ModelGrads make_grads() const;

    std::vector<float> serialize_params() const;
    void deserialize_params(const std::vector<float>& flat);
    std::string param_hash() const;  // sha256 of serialized float bytes

    void save(const std::filesystem::path& path) const;            // .bin + sidecar meta json
    static SegmentationModel load(const std::filesystem::path& path);

private:
    ModelConfig config_;
    Conv2d enc1_, enc2_, enc3_, dec1_, dec2_, head_;
    friend struct ModelLayerAccess;
};

// Mean features and probabilities over `num_passes` dropout-enabled forward
// passes; the rng advances across passes so runs are reproducible.
ModelOutput mc_dropout_predict(const SegmentationModel& model, const Tensor& image,
                               int num_passes, Rng& rng);

// Channelwise corner-aligned bilinear upsampling of a feature map.
Tensor upsample_features(const Tensor& features, int out_h, int out_w);

}  // namespace sfseg
