#include "sfseg/global_denoise.hpp"

#include <cmath>
#include <stdexcept>

namespace sfseg {

PrototypeSet::PrototypeSet(int classes, int chans)
    : num_classes(classes),
      channels(chans),
      f_obj(static_cast<size_t>(classes) * chans, 0.0f),
      f_bck(static_cast<size_t>(classes) * chans, 0.0f),
      valid(classes, 0),
      n_fg(classes, 0),
      n_bg(classes, 0) {}

PrototypeSet compute_prototypes(const std::vector<const Tensor*>& features,
                                const std::vector<const Tensor*>& labels,
                                float binarize_threshold) {
    if (features.size() != labels.size())
        throw std::invalid_argument("features/labels count mismatch");
    if (features.empty()) return PrototypeSet();

    const int chans = features[0]->c;
    const int classes = labels[0]->c;
    PrototypeSet protos(classes, chans);
    std::vector<double> sum_fg(static_cast<size_t>(classes) * chans, 0.0);
    std::vector<double> sum_bg(static_cast<size_t>(classes) * chans, 0.0);

    for (size_t i = 0; i < features.size(); ++i) {
        const Tensor& f = *features[i];
        const Tensor& l = *labels[i];
        if (f.h != l.h || f.w != l.w)
            throw std::invalid_argument("features must be at label resolution");
        for (int y = 0; y < f.h; ++y)
            for (int x = 0; x < f.w; ++x) {
                const float* fv = f.pixel(y, x);
                const float* lv = l.pixel(y, x);
                for (int c = 0; c < classes; ++c) {
                    bool fg = lv[c] >= binarize_threshold;
                    double* acc = (fg ? sum_fg.data() : sum_bg.data()) +
                                  static_cast<size_t>(c) * chans;
                    for (int ch = 0; ch < chans; ++ch) acc[ch] += fv[ch];
                    if (fg)
                        ++protos.n_fg[c];
                    else
                        ++protos.n_bg[c];
                }
            }
    }

    for (int c = 0; c < classes; ++c) {
        if (protos.n_fg[c] > 0)
            for (int ch = 0; ch < chans; ++ch)
                protos.obj(c)[ch] = static_cast<float>(
                    sum_fg[static_cast<size_t>(c) * chans + ch] / protos.n_fg[c]);
        if (protos.n_bg[c] > 0)
            for (int ch = 0; ch < chans; ++ch)
                protos.bck(c)[ch] = static_cast<float>(
                    sum_bg[static_cast<size_t>(c) * chans + ch] / protos.n_bg[c]);
        protos.valid[c] = (protos.n_fg[c] > 0 && protos.n_bg[c] > 0) ? 1 : 0;
    }
    return protos;
}

double prototype_affinity(const float* feature, const float* prototype, int channels,
                          AffinityMetric metric) {
    if (metric == AffinityMetric::cosine)
        return static_cast<double>(cosine_similarity(feature, prototype, channels));
    double acc = 0.0;
    for (int i = 0; i < channels; ++i) {
        double d = static_cast<double>(feature[i]) - static_cast<double>(prototype[i]);
        acc += d * d;
    }
    return -std::sqrt(acc);
}

PrototypeMask build_mask(const Tensor& features, const PrototypeSet& protos,
                         AffinityMetric metric) {
    if (protos.num_classes == 0) throw std::invalid_argument("empty prototype set");
    if (features.c != protos.channels)
        throw std::invalid_argument("feature channels do not match prototypes");

    PrototypeMask out;
    out.mask = Tensor(features.h, features.w, protos.num_classes);
    out.affinity_fg = Tensor(features.h, features.w, protos.num_classes);
    out.affinity_bg = Tensor(features.h, features.w, protos.num_classes);

    for (int y = 0; y < features.h; ++y)
        for (int x = 0; x < features.w; ++x) {
            const float* fv = features.pixel(y, x);
            for (int c = 0; c < protos.num_classes; ++c) {
                if (!protos.valid[c]) {
                    out.mask.at(y, x, c) = 1.0f;  // all-pass: fusion keeps the local label
                    continue;
                }
                double afg = prototype_affinity(fv, protos.obj(c), protos.channels, metric);
                double abg = prototype_affinity(fv, protos.bck(c), protos.channels, metric);
                out.affinity_fg.at(y, x, c) = static_cast<float>(afg);
                out.affinity_bg.at(y, x, c) = static_cast<float>(abg);
                out.mask.at(y, x, c) = afg >= abg ? 1.0f : 0.0f;  // ties go foreground
            }
        }
    return out;
}

PseudoLabel fuse_pseudolabel(const PseudoLabel& local_label, const PrototypeMask& mask,
                             float binarize_threshold) {
    const Tensor& lv = local_label.values;
    if (!lv.same_shape(mask.mask)) throw std::invalid_argument("fuse: shape mismatch");
    PseudoLabel out;
    out.soft = false;
    out.values = Tensor(lv.h, lv.w, lv.c);
    for (size_t i = 0; i < lv.data.size(); ++i) {
        bool fg = lv.data[i] >= binarize_threshold;
        bool pass = mask.mask.data[i] >= 0.5f;
        out.values.data[i] = (fg && pass) ? 1.0f : 0.0f;
    }
    return out;
}

PrototypeSet update_prototypes_online(const PrototypeSet& previous,
                                      const PrototypeSet& batch_protos, float momentum) {
    if (previous.num_classes == 0) return batch_protos;
    if (batch_protos.num_classes == 0) return previous;
    if (previous.num_classes != batch_protos.num_classes ||
        previous.channels != batch_protos.channels)
        throw std::invalid_argument("prototype shape mismatch");

    PrototypeSet out = previous;
    for (int c = 0; c < out.num_classes; ++c) {
        if (!batch_protos.valid[c]) continue;  // keep previous values for this class
        if (previous.valid[c]) {
            for (int ch = 0; ch < out.channels; ++ch) {
                out.obj(c)[ch] =
                    momentum * previous.obj(c)[ch] + (1.0f - momentum) * batch_protos.obj(c)[ch];
                out.bck(c)[ch] =
                    momentum * previous.bck(c)[ch] + (1.0f - momentum) * batch_protos.bck(c)[ch];
            }
        } else {
            for (int ch = 0; ch < out.channels; ++ch) {
                out.obj(c)[ch] = batch_protos.obj(c)[ch];
                out.bck(c)[ch] = batch_protos.bck(c)[ch];
            }
        }
        out.valid[c] = 1;
        out.n_fg[c] = previous.n_fg[c] + batch_protos.n_fg[c];
        out.n_bg[c] = previous.n_bg[c] + batch_protos.n_bg[c];
    }
    return out;
}

AffinityMetric affinity_metric_from_name(const std::string& name) {
    if (name == "cosine") return AffinityMetric::cosine;
    if (name == "neg_l2") return AffinityMetric::neg_l2;
    throw std::invalid_argument("unknown affinity metric: " + name);
}

std::string affinity_metric_name(AffinityMetric m) {
    return m == AffinityMetric::cosine ? "cosine" : "neg_l2";
}

}  // namespace sfseg
