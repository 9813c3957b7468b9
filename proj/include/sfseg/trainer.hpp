#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sfseg/dataset.hpp"
#include "sfseg/global_denoise.hpp"
#include "sfseg/local_denoise.hpp"
#include "sfseg/metrics.hpp"
#include "sfseg/sample_division.hpp"
#include "sfseg/segmodel.hpp"

namespace sfseg {

struct TrainConfig {
    int batch_size = 8;
    double learning_rate = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    int epochs_source = 40;
    int epochs_adapt = 8;
    int num_passes = 10;  // MC dropout forward passes
    uint64_t seed = 17;
    DivisionConfig division;
    LocalCorrectionConfig local;
    float prototype_momentum = 0.0f;
    AffinityMetric metric = AffinityMetric::cosine;
    float binarize_threshold = 0.5f;
    bool augment = true;
    double val_fraction = 0.1;
    bool global_enabled = true;  // false = local-only ablation (all-pass mask)
    bool trace_prototypes = false;
    std::filesystem::path trace_path;
    int threads = 0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    long easy_count = -1;  // -1 = division not computed this epoch
    std::optional<double> eval_dice;
    std::optional<double> eval_asd;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

void write_history_jsonl(const std::filesystem::path& path, const TrainHistory& history);

// Mean over pixels/channels of -[p log q + (1-p) log(1-q)], natural log,
// q clamped to [1e-7, 1-1e-7].
double adaptation_loss(const Tensor& pred_probs, const PseudoLabel& pseudo);

// Same loss evaluated from logits, with the analytic gradient d(loss)/d(logit).
// Templated so tests can run the identical code path in double precision.
template <typename T>
T adaptation_loss_from_logits(const T* logits, const T* pseudo, size_t n, T* grad_out) {
    const T eps = static_cast<T>(1e-7);
    const T inv_n = static_cast<T>(1) / static_cast<T>(n);
    T total = 0;
    for (size_t i = 0; i < n; ++i) {
        T q = static_cast<T>(1) / (static_cast<T>(1) + std::exp(-logits[i]));
        T p = pseudo[i];
        T lq = std::log(q > eps ? q : eps);
        T lq1 = std::log((static_cast<T>(1) - q) > eps ? (static_cast<T>(1) - q) : eps);
        total -= p * lq + (static_cast<T>(1) - p) * lq1;
        if (grad_out) {
            T g = 0;
            if (q > eps) g -= p * (static_cast<T>(1) - q);
            if (static_cast<T>(1) - q > eps) g += (static_cast<T>(1) - p) * q;
            grad_out[i] = g * inv_n;
        }
    }
    return total * inv_n;
}

// Per-channel binary cross-entropy plus soft Dice (equal weights), from
// full-resolution logits; returns loss and writes d(loss)/d(logit).
double supervised_loss_from_logits(const Tensor& uplogits, const Tensor& target,
                                   Tensor* grad_out);

class AdamOptimizer {
public:
    AdamOptimizer(double lr, double beta1, double beta2, double eps)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
    void init(const SegmentationModel& model);
    void step(SegmentationModel& model, const ModelGrads& grads);

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

// Supervised pretraining with augmentation; the model is left at the
// best-by-validation parameters (seeded 10% held-out split).
TrainHistory pretrain_source(SegmentationModel& model, const std::vector<ImageSample>& source_set,
                             const TrainConfig& config);

// Self-training on cached locally-corrected pseudo-labels with per-epoch
// easy/hard division and per-batch online prototype correction. Target masks
// are never read.
TrainHistory adapt(SegmentationModel& model, const std::vector<ImageSample>& target_set,
                   const std::filesystem::path& cache_dir, const TrainConfig& config);

struct EvalRow {
    double dice_mean = 0.0, dice_std = 0.0;
    double asd_mean = std::nan(""), asd_std = std::nan("");
    int asd_skipped = 0;
};

struct EvalTable {
    EvalRow disc, cup;
    double avg_dice = 0.0, avg_asd = std::nan("");
    int n = 0;
};

// Per-structure Dice/ASD means and stds (n-1 denominator) plus the averaged
// pair; empty predictions skip the ASD entry with a warning count.
EvalTable evaluate(const SegmentationModel& model, const std::vector<ImageSample>& labeled_set);

std::string eval_table_text(const std::vector<std::pair<std::string, EvalTable>>& rows);
std::string eval_table_csv(const std::vector<std::pair<std::string, EvalTable>>& rows);

}  // namespace sfseg
