#include "sfseg/segmodel.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sfseg/hash.hpp"
#include "sfseg/util.hpp"

namespace sfseg {

void ModelGrads::zero() {
    for (auto& blk : g) std::fill(blk.begin(), blk.end(), 0.0f);
}

void ModelGrads::add(const ModelGrads& other) {
    for (size_t i = 0; i < g.size(); ++i)
        for (size_t j = 0; j < g[i].size(); ++j) g[i][j] += other.g[i][j];
}

void ModelGrads::scale(float s) {
    for (auto& blk : g)
        for (auto& v : blk) v *= s;
}

SegmentationModel SegmentationModel::make_reference(const ModelConfig& config,
                                                    uint64_t init_seed) {
    if (config.feature_channels < 4 || config.feature_channels % 4 != 0)
        throw std::invalid_argument("feature_channels must be a positive multiple of 4");
    if (config.num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
    if (!(config.dropout_rate >= 0.0f && config.dropout_rate < 1.0f))
        throw std::invalid_argument("dropout_rate must be in [0,1)");

    SegmentationModel m;
    m.config_ = config;
    const int f = config.feature_channels;
    m.enc1_ = Conv2d(3, f / 4, 3, 1, 1);
    m.enc2_ = Conv2d(f / 4, f / 2, 3, 2, 1);
    m.enc3_ = Conv2d(f / 2, f, 3, 2, 1);
    m.dec1_ = Conv2d(f, f, 3, 1, 1);
    m.dec2_ = Conv2d(f, f, 3, 1, 1);
    m.head_ = Conv2d(f, config.num_classes, 1, 1, 0);

    Rng rng(init_seed);
    m.enc1_.init_he(rng);
    m.enc2_.init_he(rng);
    m.enc3_.init_he(rng);
    m.dec1_.init_he(rng);
    m.dec2_.init_he(rng);
    m.head_.init_he(rng);
    return m;
}

namespace {

void apply_dropout(Tensor& t, float rate, Rng& rng, std::vector<float>* scale_out) {
    if (rate <= 0.0f) {
        if (scale_out) scale_out->clear();
        return;
    }
    const float keep = 1.0f - rate;
    const float scale = 1.0f / keep;
    if (scale_out) scale_out->resize(t.data.size());
    for (size_t i = 0; i < t.data.size(); ++i) {
        float s = rng.uniform() < keep ? scale : 0.0f;
        t.data[i] *= s;
        if (scale_out) (*scale_out)[i] = s;
    }
}

}  // namespace

ForwardStash SegmentationModel::forward_train(const Tensor& image, bool dropout_enabled,
                                              Rng& rng) const {
    if (image.c != 3) throw std::invalid_argument("model expects 3-channel input");
    if (image.h % stride() != 0 || image.w % stride() != 0)
        throw std::invalid_argument("image size must be divisible by the backbone stride");

    ForwardStash s;
    s.input = image;
    s.a1 = enc1_.forward(image);
    relu_inplace(s.a1);
    s.a2 = enc2_.forward(s.a1);
    relu_inplace(s.a2);
    s.a3 = enc3_.forward(s.a2);
    relu_inplace(s.a3);
    s.a3d = s.a3;
    if (dropout_enabled) apply_dropout(s.a3d, config_.dropout_rate, rng, &s.drop_scale);
    s.d1 = dec1_.forward(s.a3d);
    relu_inplace(s.d1);
    s.d2 = dec2_.forward(s.d1);
    relu_inplace(s.d2);
    s.logits = head_.forward(s.d2);
    s.uplogits = upsample_bilinear(s.logits, image.h, image.w);
    s.probs = s.uplogits;
    sigmoid_inplace(s.probs);
    return s;
}

ModelOutput SegmentationModel::forward(const Tensor& image, bool dropout_enabled,
                                       Rng& rng) const {
    ForwardStash s = forward_train(image, dropout_enabled, rng);
    return ModelOutput{std::move(s.d2), std::move(s.probs)};
}

void SegmentationModel::backward(const ForwardStash& s, const Tensor& d_uplogits,
                                 ModelGrads& grads) const {
    Tensor g = upsample_bilinear_backward(d_uplogits, s.logits.h, s.logits.w);
    Tensor gd2 = head_.backward(s.d2, g, grads.g[10], grads.g[11]);
    relu_backward_inplace(gd2, s.d2);
    Tensor gd1 = dec2_.backward(s.d1, gd2, grads.g[8], grads.g[9]);
    relu_backward_inplace(gd1, s.d1);
    Tensor ga3d = dec1_.backward(s.a3d, gd1, grads.g[6], grads.g[7]);
    if (!s.drop_scale.empty())
        for (size_t i = 0; i < ga3d.data.size(); ++i) ga3d.data[i] *= s.drop_scale[i];
    relu_backward_inplace(ga3d, s.a3);
    Tensor ga2 = enc3_.backward(s.a2, ga3d, grads.g[4], grads.g[5]);
    relu_backward_inplace(ga2, s.a2);
    Tensor ga1 = enc2_.backward(s.a1, ga2, grads.g[2], grads.g[3]);
    relu_backward_inplace(ga1, s.a1);
    enc1_.backward(s.input, ga1, grads.g[0], grads.g[1]);
}

size_t SegmentationModel::param_count() const {
    return enc1_.weight_count() + enc2_.weight_count() + enc3_.weight_count() +
           dec1_.weight_count() + dec2_.weight_count() + head_.weight_count();
}

std::vector<SegmentationModel::Block> SegmentationModel::blocks() {
    std::vector<Block> out;
    for (Conv2d* c : {&enc1_, &enc2_, &enc3_, &dec1_, &dec2_, &head_}) {
        out.push_back({c->w.data(), c->w.size()});
        out.push_back({c->b.data(), c->b.size()});
    }
    return out;
}

std::vector<SegmentationModel::Block> SegmentationModel::blocks() const {
    return const_cast<SegmentationModel*>(this)->blocks();
}

ModelGrads SegmentationModel::make_grads() const {
    ModelGrads grads;
    for (const Conv2d* c : {&enc1_, &enc2_, &enc3_, &dec1_, &dec2_, &head_}) {
        grads.g.emplace_back(c->w.size(), 0.0f);
        grads.g.emplace_back(c->b.size(), 0.0f);
    }
    return grads;
}

std::vector<float> SegmentationModel::serialize_params() const {
    std::vector<float> flat;
    flat.reserve(param_count());
    for (const auto& blk : blocks()) flat.insert(flat.end(), blk.data, blk.data + blk.n);
    return flat;
}

void SegmentationModel::deserialize_params(const std::vector<float>& flat) {
    size_t off = 0;
    for (auto& blk : blocks()) {
        if (off + blk.n > flat.size()) throw std::runtime_error("param payload too short");
        std::memcpy(blk.data, flat.data() + off, blk.n * sizeof(float));
        off += blk.n;
    }
    if (off != flat.size()) throw std::runtime_error("param payload size mismatch");
}

std::string SegmentationModel::param_hash() const {
    std::vector<float> flat = serialize_params();
    return sha256_hex(flat.data(), flat.size() * sizeof(float));
}

namespace {
constexpr char kCkptMagic[4] = {'S', 'F', 'C', 'K'};
}

void SegmentationModel::save(const std::filesystem::path& path) const {
    std::vector<float> flat = serialize_params();
    std::string bytes;
    bytes.reserve(32 + flat.size() * sizeof(float));
    auto put = [&bytes](const void* p, size_t n) {
        bytes.append(reinterpret_cast<const char*>(p), n);
    };
    uint16_t version = 1, reserved = 0;
    int32_t fc = config_.feature_channels, nc = config_.num_classes, st = stride();
    float dr = config_.dropout_rate;
    uint64_t n = flat.size();
    put(kCkptMagic, 4);
    put(&version, 2);
    put(&reserved, 2);
    put(&fc, 4);
    put(&nc, 4);
    put(&st, 4);
    put(&dr, 4);
    put(&n, 8);
    put(flat.data(), flat.size() * sizeof(float));
    atomic_write_file(path, bytes);

    nlohmann::json meta;
    meta["C1"] = config_.feature_channels;
    meta["C2"] = config_.num_classes;
    meta["stride"] = stride();
    meta["dropout_rate"] = config_.dropout_rate;
    meta["parameter_hash"] = param_hash();
    std::filesystem::path meta_path = path;
    meta_path.replace_extension(".model_meta.json");
    atomic_write_file(meta_path, meta.dump(2) + "\n");
}

SegmentationModel SegmentationModel::load(const std::filesystem::path& path) {
    std::string bytes = read_file_bytes(path);
    if (bytes.size() < 32 || std::memcmp(bytes.data(), kCkptMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path.string());
    size_t off = 4;
    auto get = [&bytes, &off](void* p, size_t n) {
        std::memcpy(p, bytes.data() + off, n);
        off += n;
    };
    uint16_t version = 0, reserved = 0;
    int32_t fc = 0, nc = 0, st = 0;
    float dr = 0.0f;
    uint64_t n = 0;
    get(&version, 2);
    get(&reserved, 2);
    get(&fc, 4);
    get(&nc, 4);
    get(&st, 4);
    get(&dr, 4);
    get(&n, 8);
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    ModelConfig config;
    config.feature_channels = fc;
    config.num_classes = nc;
    config.dropout_rate = dr;
    SegmentationModel m = make_reference(config, 0);
    if (bytes.size() - off != n * sizeof(float))
        throw std::runtime_error("checkpoint payload truncated");
    std::vector<float> flat(n);
    std::memcpy(flat.data(), bytes.data() + off, n * sizeof(float));
    m.deserialize_params(flat);
    return m;
}

ModelOutput mc_dropout_predict(const SegmentationModel& model, const Tensor& image,
                               int num_passes, Rng& rng) {
    if (num_passes < 1) throw std::invalid_argument("num_passes must be >= 1");
    std::vector<double> feat_acc, prob_acc;
    int fh = 0, fw = 0, fc = 0;
    for (int pass = 0; pass < num_passes; ++pass) {
        ModelOutput out = model.forward(image, true, rng);
        if (pass == 0) {
            fh = out.features.h;
            fw = out.features.w;
            fc = out.features.c;
            feat_acc.assign(out.features.size(), 0.0);
            prob_acc.assign(out.probs.size(), 0.0);
        }
        for (size_t i = 0; i < out.features.size(); ++i) feat_acc[i] += out.features.data[i];
        for (size_t i = 0; i < out.probs.size(); ++i) prob_acc[i] += out.probs.data[i];
    }
    ModelOutput mean;
    mean.features = Tensor(fh, fw, fc);
    mean.probs = Tensor(image.h, image.w, model.config().num_classes);
    const double inv = 1.0 / num_passes;
    for (size_t i = 0; i < feat_acc.size(); ++i)
        mean.features.data[i] = static_cast<float>(feat_acc[i] * inv);
    for (size_t i = 0; i < prob_acc.size(); ++i)
        mean.probs.data[i] = static_cast<float>(prob_acc[i] * inv);
    return mean;
}

Tensor upsample_features(const Tensor& features, int out_h, int out_w) {
    if (out_h < features.h || out_w < features.w)
        throw std::invalid_argument("upsample_features: target smaller than source");
    return upsample_bilinear(features, out_h, out_w);
}

}  // namespace sfseg
