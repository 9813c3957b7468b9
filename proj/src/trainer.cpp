#include "sfseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "sfseg/util.hpp"

namespace sfseg {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
    if (num_passes < 1) throw std::invalid_argument("num_passes must be >= 1");
    if (epochs_source < 0 || epochs_adapt < 0) throw std::invalid_argument("negative epochs");
    local.validate();
    division.validate();
}

void write_history_jsonl(const std::filesystem::path& path, const TrainHistory& history) {
    std::string out;
    for (const auto& e : history.epochs) {
        nlohmann::json j;
        j["epoch"] = e.epoch;
        j["loss"] = e.loss;
        if (e.easy_count >= 0) j["easy_count"] = e.easy_count;
        if (e.eval_dice) j["eval_dice"] = *e.eval_dice;
        if (e.eval_asd) j["eval_asd"] = *e.eval_asd;
        out += j.dump() + "\n";
    }
    atomic_write_file(path, out);
}

double adaptation_loss(const Tensor& pred_probs, const PseudoLabel& pseudo) {
    if (!pred_probs.same_shape(pseudo.values))
        throw std::invalid_argument("adaptation_loss: shape mismatch");
    const double eps = 1e-7;
    double total = 0.0;
    for (size_t i = 0; i < pred_probs.data.size(); ++i) {
        double q = static_cast<double>(pred_probs.data[i]);
        double p = static_cast<double>(pseudo.values.data[i]);
        double lq = std::log(std::max(q, eps));
        double lq1 = std::log(std::max(1.0 - q, eps));
        total -= p * lq + (1.0 - p) * lq1;
    }
    return total / static_cast<double>(pred_probs.data.size());
}

double supervised_loss_from_logits(const Tensor& uplogits, const Tensor& target,
                                   Tensor* grad_out) {
    if (!uplogits.same_shape(target))
        throw std::invalid_argument("supervised loss: shape mismatch");
    const size_t n = uplogits.data.size();
    const int channels = uplogits.c;
    const double eps = 1e-7;

    std::vector<float> q(n);
    for (size_t i = 0; i < n; ++i) q[i] = 1.0f / (1.0f + std::exp(-uplogits.data[i]));

    // BCE, mean over all elements
    double bce = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double qi = q[i], t = target.data[i];
        bce -= t * std::log(std::max(qi, eps)) + (1.0 - t) * std::log(std::max(1.0 - qi, eps));
    }
    bce /= static_cast<double>(n);

    // soft Dice per channel
    std::vector<double> inter(channels, 0.0), sum_q(channels, 0.0), sum_t(channels, 0.0);
    for (size_t i = 0; i < n; ++i) {
        int c = static_cast<int>(i % channels);
        inter[c] += static_cast<double>(q[i]) * target.data[i];
        sum_q[c] += q[i];
        sum_t[c] += target.data[i];
    }
    const double smooth = 1.0;
    double dice_loss = 0.0;
    std::vector<double> numer(channels), denom(channels);
    for (int c = 0; c < channels; ++c) {
        numer[c] = 2.0 * inter[c] + smooth;
        denom[c] = sum_q[c] + sum_t[c] + smooth;
        dice_loss += 1.0 - numer[c] / denom[c];
    }
    dice_loss /= static_cast<double>(channels);

    if (grad_out) {
        *grad_out = Tensor(uplogits.h, uplogits.w, uplogits.c);
        const double inv_n = 1.0 / static_cast<double>(n);
        const double inv_c = 1.0 / static_cast<double>(channels);
        for (size_t i = 0; i < n; ++i) {
            int c = static_cast<int>(i % channels);
            double qi = q[i], t = target.data[i];
            double g_bce = 0.0;
            if (qi > eps) g_bce -= t * (1.0 - qi);
            if (1.0 - qi > eps) g_bce += (1.0 - t) * qi;
            g_bce *= inv_n;
            // d(1 - D_c)/dq = -(2 t S - numer)/S^2, chain with sigmoid'
            double dD = (2.0 * t * denom[c] - numer[c]) / (denom[c] * denom[c]);
            double g_dice = -inv_c * dD * qi * (1.0 - qi);
            grad_out->data[i] = static_cast<float>(g_bce + g_dice);
        }
    }
    return bce + dice_loss;
}

void AdamOptimizer::init(const SegmentationModel& model) {
    m_.clear();
    v_.clear();
    for (const auto& blk : model.blocks()) {
        m_.emplace_back(blk.n, 0.0f);
        v_.emplace_back(blk.n, 0.0f);
    }
    t_ = 0;
}

void AdamOptimizer::step(SegmentationModel& model, const ModelGrads& grads) {
    auto blocks = model.blocks();
    if (m_.size() != blocks.size()) throw std::runtime_error("optimizer not initialized");
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (size_t i = 0; i < blocks.size(); ++i) {
        float* p = blocks[i].data;
        const std::vector<float>& g = grads.g[i];
        for (size_t j = 0; j < blocks[i].n; ++j) {
            double gj = g[j];
            double m = b1_ * m_[i][j] + (1.0 - b1_) * gj;
            double v = b2_ * v_[i][j] + (1.0 - b2_) * gj * gj;
            m_[i][j] = static_cast<float>(m);
            v_[i][j] = static_cast<float>(v);
            double update = lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
            p[j] = static_cast<float>(p[j] - update);
        }
    }
}

namespace {

std::vector<int> shuffled_indices(size_t n, Rng& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    // Fisher-Yates on our own rng for cross-platform determinism
    for (size_t i = n; i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double stddev_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

TrainHistory pretrain_source(SegmentationModel& model, const std::vector<ImageSample>& source_set,
                             const TrainConfig& config) {
    config.validate();
    if (source_set.empty()) throw std::invalid_argument("empty source set");
    for (const auto& s : source_set)
        if (!s.mask) throw std::invalid_argument("unlabeled sample in source set: " + s.id);

    Rng base(mix64(config.seed ^ 0x50524531ULL));

    // seeded held-out split
    Rng split_rng = base.fork(1);
    std::vector<int> order = shuffled_indices(source_set.size(), split_rng);
    size_t val_n = static_cast<size_t>(config.val_fraction * source_set.size());
    std::vector<int> val_idx(order.begin(), order.begin() + val_n);
    std::vector<int> train_idx(order.begin() + val_n, order.end());
    if (train_idx.empty()) train_idx = order;
    if (val_idx.empty()) val_idx = train_idx;

    AdamOptimizer adam(config.learning_rate, config.beta1, config.beta2, config.epsilon);
    adam.init(model);

    const int bs = config.batch_size;
    std::vector<ModelGrads> slot_grads(bs, model.make_grads());
    ModelGrads total = model.make_grads();

    TrainHistory history;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<float> best_params = model.serialize_params();

    for (int epoch = 1; epoch <= config.epochs_source; ++epoch) {
        Rng epoch_rng = base.fork(0x1000 + static_cast<uint64_t>(epoch));
        std::vector<int> epoch_order = shuffled_indices(train_idx.size(), epoch_rng);

        double epoch_loss = 0.0;
        int steps = 0;
        for (size_t start = 0; start < epoch_order.size(); start += bs) {
            const int nb = static_cast<int>(std::min<size_t>(bs, epoch_order.size() - start));
            std::vector<double> losses(nb, 0.0);
            parallel_for(
                nb,
                [&](int slot) {
                    int idx = train_idx[epoch_order[start + slot]];
                    Rng img_rng = epoch_rng.fork(0x9000 + start + static_cast<uint64_t>(slot));
                    ImageSample s = source_set[idx];
                    if (config.augment) s = augment(s, img_rng);
                    ForwardStash stash = model.forward_train(s.image, true, img_rng);
                    Tensor grad;
                    losses[slot] = supervised_loss_from_logits(stash.uplogits, *s.mask, &grad);
                    slot_grads[slot].zero();
                    model.backward(stash, grad, slot_grads[slot]);
                },
                config.threads);
            total.zero();
            for (int slot = 0; slot < nb; ++slot) total.add(slot_grads[slot]);
            total.scale(1.0f / static_cast<float>(nb));
            adam.step(model, total);
            for (int slot = 0; slot < nb; ++slot) epoch_loss += losses[slot];
            steps += nb;
        }
        epoch_loss /= std::max(1, steps);

        // validation pass, dropout and augmentation off
        double val_loss = 0.0;
        std::vector<double> val_dice, val_asd;
        for (int idx : val_idx) {
            Rng eval_rng(0);
            ForwardStash stash = model.forward_train(source_set[idx].image, false, eval_rng);
            val_loss += supervised_loss_from_logits(stash.uplogits, *source_set[idx].mask, nullptr);
            auto pred = binarize(stash.probs, 0.5f);
            for (int c = 0; c < 2; ++c) {
                BinaryMask truth = mask_channel(*source_set[idx].mask, c);
                val_dice.push_back(dice(pred[c], truth));
                if (auto d = asd(pred[c], truth)) val_asd.push_back(*d);
            }
        }
        val_loss /= static_cast<double>(val_idx.size());

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = epoch_loss;
        rec.eval_dice = mean_of(val_dice);
        if (!val_asd.empty()) rec.eval_asd = mean_of(val_asd);
        history.epochs.push_back(rec);

        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = model.serialize_params();
        }
        if (!std::isfinite(epoch_loss)) throw std::runtime_error("pretraining diverged");
    }

    model.deserialize_params(best_params);
    return history;
}

TrainHistory adapt(SegmentationModel& model, const std::vector<ImageSample>& target_set,
                   const std::filesystem::path& cache_dir, const TrainConfig& config) {
    config.validate();
    if (target_set.empty()) throw std::invalid_argument("empty target set");

    // Source-free contract: only ids and images are touched from here on.
    std::vector<std::string> ids(target_set.size());
    for (size_t i = 0; i < target_set.size(); ++i) ids[i] = target_set[i].id;

    CacheManifest manifest = read_cache_manifest(cache_dir);
    verify_cache(manifest, cache_dir, ids);

    std::map<std::string, Tensor> cached;
    for (const auto& e : manifest.entries) cached[e.id] = read_label_cache(cache_dir / e.file);
    for (const auto& s : target_set) {
        const Tensor& t = cached.at(s.id);
        if (t.h != s.image.h || t.w != s.image.w)
            throw std::runtime_error("cache resolution mismatch for " + s.id);
    }

    Rng base(mix64(config.seed ^ 0x41444150ULL));
    AdamOptimizer adam(config.learning_rate, config.beta1, config.beta2, config.epsilon);
    adam.init(model);

    const int bs = config.batch_size;
    std::vector<ModelGrads> slot_grads(bs, model.make_grads());
    ModelGrads total = model.make_grads();

    PrototypeSet protos;  // starts empty; all-pass masks until first valid batch
    TrainHistory history;
    std::ofstream trace;
    if (config.trace_prototypes && !config.trace_path.empty())
        trace.open(config.trace_path, std::ios::trunc);
    long global_step = 0;

    for (int epoch = 1; epoch <= config.epochs_adapt; ++epoch) {
        // refresh easy/hard division from the current model
        std::set<std::string> easy;
        long easy_count = -1;
        if (config.global_enabled) {
            std::vector<EntropyRecord> records(target_set.size());
            parallel_for(
                static_cast<int>(target_set.size()),
                [&](int i) {
                    Rng r(0);
                    ModelOutput out = model.forward(target_set[i].image, false, r);
                    records[i] = {target_set[i].id,
                                  image_entropy(out.probs, config.division.log_base,
                                                config.division.form)};
                },
                config.threads);
            DivisionResult division = divide(records, config.division);
            easy.insert(division.easy_ids.begin(), division.easy_ids.end());
            easy_count = static_cast<long>(easy.size());
        }

        Rng epoch_rng = base.fork(0x2000 + static_cast<uint64_t>(epoch));
        std::vector<int> order = shuffled_indices(target_set.size(), epoch_rng);

        double epoch_loss = 0.0;
        int seen = 0;
        for (size_t start = 0; start < order.size(); start += bs) {
            const int nb = static_cast<int>(std::min<size_t>(bs, order.size() - start));
            std::vector<ForwardStash> stashes(nb);
            std::vector<Tensor> upfeats(nb);
            parallel_for(
                nb,
                [&](int slot) {
                    const ImageSample& s = target_set[order[start + slot]];
                    Rng img_rng = epoch_rng.fork(0xA000 + start + static_cast<uint64_t>(slot));
                    stashes[slot] = model.forward_train(s.image, true, img_rng);
                    upfeats[slot] = upsample_features(stashes[slot].d2, s.image.h, s.image.w);
                },
                config.threads);

            if (config.global_enabled) {
                std::vector<const Tensor*> easy_feats, easy_labels;
                for (int slot = 0; slot < nb; ++slot) {
                    const ImageSample& s = target_set[order[start + slot]];
                    if (easy.count(s.id)) {
                        easy_feats.push_back(&upfeats[slot]);
                        easy_labels.push_back(&cached.at(s.id));
                    }
                }
                if (!easy_feats.empty()) {
                    PrototypeSet batch_protos = compute_prototypes(easy_feats, easy_labels,
                                                                   config.binarize_threshold);
                    protos = update_prototypes_online(protos, batch_protos,
                                                      config.prototype_momentum);
                    if (trace.is_open()) {
                        for (int c = 0; c < protos.num_classes; ++c) {
                            double no = 0, nb2 = 0, dot = 0;
                            for (int ch = 0; ch < protos.channels; ++ch) {
                                no += protos.obj(c)[ch] * protos.obj(c)[ch];
                                nb2 += protos.bck(c)[ch] * protos.bck(c)[ch];
                                dot += protos.obj(c)[ch] * protos.bck(c)[ch];
                            }
                            nlohmann::json j;
                            j["step"] = global_step;
                            j["class"] = c;
                            j["valid"] = static_cast<bool>(protos.valid[c]);
                            j["n_fg"] = protos.n_fg[c];
                            j["n_bg"] = protos.n_bg[c];
                            j["norm_f_obj"] = std::sqrt(no);
                            j["norm_f_bck"] = std::sqrt(nb2);
                            j["cos_obj_bck"] =
                                (no > 0 && nb2 > 0) ? dot / (std::sqrt(no) * std::sqrt(nb2)) : 0.0;
                            trace << j.dump() << "\n";
                        }
                    }
                }
            }

            std::vector<double> losses(nb, 0.0);
            parallel_for(
                nb,
                [&](int slot) {
                    const ImageSample& s = target_set[order[start + slot]];
                    PseudoLabel local{cached.at(s.id), true};
                    PseudoLabel fused;
                    if (config.global_enabled && protos.num_classes > 0) {
                        PrototypeMask mask = build_mask(upfeats[slot], protos, config.metric);
                        fused = fuse_pseudolabel(local, mask, config.binarize_threshold);
                    } else {
                        // all-pass mask: fused = binarized local label
                        fused.soft = false;
                        fused.values = Tensor(local.values.h, local.values.w, local.values.c);
                        for (size_t i = 0; i < local.values.data.size(); ++i)
                            fused.values.data[i] =
                                local.values.data[i] >= config.binarize_threshold ? 1.0f : 0.0f;
                    }
                    Tensor grad(stashes[slot].uplogits.h, stashes[slot].uplogits.w,
                                stashes[slot].uplogits.c);
                    losses[slot] = adaptation_loss_from_logits<float>(
                        stashes[slot].uplogits.data.data(), fused.values.data.data(),
                        grad.data.size(), grad.data.data());
                    slot_grads[slot].zero();
                    model.backward(stashes[slot], grad, slot_grads[slot]);
                },
                config.threads);

            total.zero();
            for (int slot = 0; slot < nb; ++slot) total.add(slot_grads[slot]);
            total.scale(1.0f / static_cast<float>(nb));
            adam.step(model, total);
            ++global_step;

            double batch_loss = 0.0;
            for (int slot = 0; slot < nb; ++slot) batch_loss += losses[slot];
            if (!std::isfinite(batch_loss)) throw std::runtime_error("adaptation diverged");
            epoch_loss += batch_loss;
            seen += nb;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = epoch_loss / std::max(1, seen);
        rec.easy_count = easy_count;
        history.epochs.push_back(rec);
    }
    return history;
}

EvalTable evaluate(const SegmentationModel& model, const std::vector<ImageSample>& labeled_set) {
    if (labeled_set.empty()) throw std::invalid_argument("evaluate: empty set");
    for (const auto& s : labeled_set)
        if (!s.mask) throw std::invalid_argument("evaluate: sample without mask: " + s.id);

    std::vector<double> dice_vals[2], asd_vals[2];
    int skipped[2] = {0, 0};
    for (const auto& s : labeled_set) {
        Rng r(0);
        ModelOutput out = model.forward(s.image, false, r);
        auto pred = binarize(out.probs, 0.5f);
        for (int c = 0; c < 2; ++c) {
            BinaryMask truth = mask_channel(*s.mask, c);
            dice_vals[c].push_back(dice(pred[c], truth));
            if (auto d = asd(pred[c], truth))
                asd_vals[c].push_back(*d);
            else
                ++skipped[c];
        }
    }

    auto fill = [](const std::vector<double>& dv, const std::vector<double>& av, int skip) {
        EvalRow row;
        row.dice_mean = mean_of(dv);
        row.dice_std = stddev_of(dv, row.dice_mean);
        if (!av.empty()) {
            row.asd_mean = mean_of(av);
            row.asd_std = stddev_of(av, row.asd_mean);
        }
        row.asd_skipped = skip;
        return row;
    };
    EvalTable table;
    table.cup = fill(dice_vals[0], asd_vals[0], skipped[0]);
    table.disc = fill(dice_vals[1], asd_vals[1], skipped[1]);
    table.avg_dice = 0.5 * (table.disc.dice_mean + table.cup.dice_mean);
    if (!std::isnan(table.disc.asd_mean) && !std::isnan(table.cup.asd_mean))
        table.avg_asd = 0.5 * (table.disc.asd_mean + table.cup.asd_mean);
    table.n = static_cast<int>(labeled_set.size());
    return table;
}

std::string eval_table_text(const std::vector<std::pair<std::string, EvalTable>>& rows) {
    std::ostringstream out;
    out << std::left;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %22s %22s %22s %22s %10s %10s\n", "method",
                  "disc-Dice[%]", "disc-ASD(px)", "cup-Dice[%]", "cup-ASD(px)", "avg-Dice",
                  "avg-ASD");
    out << buf;
    for (const auto& [name, t] : rows) {
        auto cell = [](double mean, double sd, bool pct) {
            char b[64];
            if (std::isnan(mean)) return std::string("n/a");
            std::snprintf(b, sizeof b, "%.2f +- %.2f", pct ? 100.0 * mean : mean,
                          pct ? 100.0 * sd : sd);
            return std::string(b);
        };
        std::snprintf(buf, sizeof buf, "%-16s %22s %22s %22s %22s %10.2f %10s\n", name.c_str(),
                      cell(t.disc.dice_mean, t.disc.dice_std, true).c_str(),
                      cell(t.disc.asd_mean, t.disc.asd_std, false).c_str(),
                      cell(t.cup.dice_mean, t.cup.dice_std, true).c_str(),
                      cell(t.cup.asd_mean, t.cup.asd_std, false).c_str(), 100.0 * t.avg_dice,
                      std::isnan(t.avg_asd) ? "n/a" : std::to_string(t.avg_asd).substr(0, 6).c_str());
        out << buf;
        if (t.disc.asd_skipped + t.cup.asd_skipped > 0)
            out << "  # warning: " << (t.disc.asd_skipped + t.cup.asd_skipped)
                << " ASD entries skipped (empty mask)\n";
    }
    return out.str();
}

std::string eval_table_csv(const std::vector<std::pair<std::string, EvalTable>>& rows) {
    std::ostringstream out;
    out << "method,disc_dice_mean,disc_dice_std,disc_asd_mean,disc_asd_std,"
           "cup_dice_mean,cup_dice_std,cup_asd_mean,cup_asd_std,avg_dice,avg_asd,"
           "asd_skipped,n\n";
    for (const auto& [name, t] : rows) {
        auto num = [](double v) { return std::isnan(v) ? std::string("") : std::to_string(v); };
        out << name << ',' << t.disc.dice_mean << ',' << t.disc.dice_std << ','
            << num(t.disc.asd_mean) << ',' << num(t.disc.asd_std) << ',' << t.cup.dice_mean << ','
            << t.cup.dice_std << ',' << num(t.cup.asd_mean) << ',' << num(t.cup.asd_std) << ','
            << t.avg_dice << ',' << num(t.avg_asd) << ','
            << (t.disc.asd_skipped + t.cup.asd_skipped) << ',' << t.n << "\n";
    }
    return out.str();
}

}  // namespace sfseg
