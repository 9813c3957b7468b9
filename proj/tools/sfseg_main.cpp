// sfseg: source-free segmentation adaptation lab.
//
// Pipeline commands: synth -> pretrain -> pseudolabel -> adapt -> eval,
// plus ablate (module/strategy tables) and histogram (grayscale report).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "json.hpp"
#include "sfseg/config.hpp"
#include "sfseg/dataset.hpp"
#include "sfseg/global_denoise.hpp"
#include "sfseg/local_denoise.hpp"
#include "sfseg/metrics.hpp"
#include "sfseg/report.hpp"
#include "sfseg/sample_division.hpp"
#include "sfseg/segmodel.hpp"
#include "sfseg/trainer.hpp"
#include "sfseg/util.hpp"

namespace fs = std::filesystem;
using namespace sfseg;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string run_dir = "runs/default";
    long seed = -1;
    bool force = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "config file (TOML-style sections)");
    cmd->add_option("--run-dir", args.run_dir, "run directory for inputs/outputs");
    cmd->add_option("--seed", args.seed, "override dataset.seed and train.seed");
    cmd->add_flag("--force", args.force, "overwrite existing outputs");
    cmd->allow_extras();  // --section.key=value overrides
}

fs::path resolve_run_dir(const std::string& run_dir) {
    fs::path p(run_dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("SFSEG_OUTPUT_ROOT")) p = fs::path(root) / p;
    }
    return p;
}

RunConfig resolve_config(const CommonArgs& args, CLI::App* cmd) {
    RunConfig config;
    if (!args.config_path.empty()) config.load_file(args.config_path);
    for (const std::string& extra : cmd->remaining()) config.apply_flag(extra);
    if (args.seed >= 0) {
        config.set("dataset.seed", std::to_string(args.seed), Provenance::flag);
        config.set("train.seed", std::to_string(args.seed), Provenance::flag);
    }
    return config;
}

void freeze(const RunConfig& config, const fs::path& run, const std::string& cmd_name) {
    config.freeze_to(run / ("config." + cmd_name + ".resolved.toml"));
}

void require_exists(const fs::path& p, const std::string& what) {
    if (!fs::exists(p))
        throw std::runtime_error("missing prerequisite: " + what + " (" + p.string() + ")");
}

std::vector<ImageSample> load_split(const fs::path& run, const std::string& name, DomainTag tag) {
    fs::path dir = run / "data" / name;
    require_exists(dir, name + " dataset (run `synth` first or place data there)");
    LoadResult res = load_dataset(dir, tag);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    return std::move(res.samples);
}

uint64_t model_seed(const RunConfig& config) {
    return mix64(config.get_u64("train.seed") ^ 0x4d4f44454cULL);
}

// ----------------------------------------------------------------- commands

int cmd_synth(const CommonArgs& args, const RunConfig& config) {
    fs::path run = resolve_run_dir(args.run_dir);
    fs::path data = run / "data";
    if (fs::exists(data) && !fs::is_empty(data)) {
        if (!args.force)
            throw std::runtime_error("refusing to overwrite " + data.string() +
                                     " (pass --force)");
        fs::remove_all(data);
    }
    fs::create_directories(run);
    freeze(config, run, "synth");

    SynthConfig synth = config.synth_config();
    auto [source, target] = generate_synthetic(synth);
    const int n_train = static_cast<int>(config.get_int("dataset.n_target"));

    std::vector<ImageSample> target_train(target.begin(), target.begin() + n_train);
    std::vector<ImageSample> target_test(target.begin() + n_train, target.end());
    write_dataset(data / "source", source);
    write_dataset(data / "target_train", target_train);
    write_dataset(data / "target_test", target_test);

    nlohmann::json j;
    j["image_size"] = synth.image_size;
    j["n_source"] = synth.n_source;
    j["n_target_train"] = n_train;
    j["n_target_test"] = static_cast<int>(target_test.size());
    j["seed"] = synth.seed;
    j["shift"] = {{"intensity_scale", synth.shift.intensity_scale},
                  {"contrast_gamma", synth.shift.contrast_gamma},
                  {"noise_sigma", synth.shift.noise_sigma},
                  {"blur_radius", synth.shift.blur_radius},
                  {"texture_amp", synth.shift.texture_amp}};
    atomic_write_file(data / "synth_config.json", j.dump(2) + "\n");

    std::cout << "wrote " << source.size() << " source, " << target_train.size()
              << " target-train, " << target_test.size() << " target-test images under "
              << data.string() << "\n";
    return 0;
}

int cmd_pretrain(const CommonArgs& args, const RunConfig& config) {
    fs::path run = resolve_run_dir(args.run_dir);
    fs::path ckpt = run / "ckpt_source.bin";
    if (fs::exists(ckpt) && !args.force)
        throw std::runtime_error("refusing to overwrite " + ckpt.string() + " (pass --force)");
    freeze(config, run, "pretrain");

    auto source = load_split(run, "source", DomainTag::source);
    SegmentationModel model =
        SegmentationModel::make_reference(config.model_config(), model_seed(config));
    TrainConfig tc = config.train_config();
    TrainHistory history = pretrain_source(model, source, tc);
    model.save(ckpt);
    write_history_jsonl(run / "history_source.jsonl", history);
    if (!history.epochs.empty())
        std::cout << "pretrained " << history.epochs.size() << " epochs, final loss "
                  << history.epochs.back().loss << ", checkpoint " << ckpt.string() << "\n";
    return 0;
}

int cmd_pseudolabel(const CommonArgs& args, const RunConfig& config) {
    fs::path run = resolve_run_dir(args.run_dir);
    fs::path ckpt = run / "ckpt_source.bin";
    require_exists(ckpt, "source checkpoint (run `pretrain` first)");
    freeze(config, run, "pseudolabel");

    if (args.force) fs::remove_all(run / "cache");
    auto target = load_split(run, "target_train", DomainTag::target);
    SegmentationModel model = SegmentationModel::load(ckpt);
    TrainConfig tc = config.train_config();
    CacheManifest manifest = build_pseudolabel_cache(model, target, tc.num_passes, tc.local,
                                                     run / "cache", tc.seed, false, tc.threads);
    std::cout << "pseudo-label cache: " << manifest.entries.size() << " entries under "
              << (run / "cache").string() << "\n";
    return 0;
}

int cmd_adapt(const CommonArgs& args, const RunConfig& config) {
    fs::path run = resolve_run_dir(args.run_dir);
    fs::path src_ckpt = run / "ckpt_source.bin";
    fs::path out_ckpt = run / "ckpt_adapted.bin";
    require_exists(src_ckpt, "source checkpoint (run `pretrain` first)");
    require_exists(run / "cache" / "manifest.json",
                   "pseudo-label cache (run `pseudolabel` first)");
    if (fs::exists(out_ckpt) && !args.force)
        throw std::runtime_error("refusing to overwrite " + out_ckpt.string() +
                                 " (pass --force)");
    freeze(config, run, "adapt");

    auto target = load_split(run, "target_train", DomainTag::target);
    SegmentationModel model = SegmentationModel::load(src_ckpt);
    TrainConfig tc = config.train_config();
    if (tc.trace_prototypes) tc.trace_path = run / "prototypes.jsonl";
    TrainHistory history = adapt(model, target, run / "cache", tc);
    model.save(out_ckpt);
    write_history_jsonl(run / "history_adapt.jsonl", history);
    std::cout << "adapted " << history.epochs.size() << " epochs, checkpoint "
              << out_ckpt.string() << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& args, const RunConfig& config, std::string checkpoint,
             bool error_maps) {
    fs::path run = resolve_run_dir(args.run_dir);
    fs::path ckpt = checkpoint.empty()
                        ? (fs::exists(run / "ckpt_adapted.bin") ? run / "ckpt_adapted.bin"
                                                                : run / "ckpt_source.bin")
                        : fs::path(checkpoint);
    require_exists(ckpt, "checkpoint to evaluate");
    freeze(config, run, "eval");

    auto test = load_split(run, "target_test", DomainTag::target);
    SegmentationModel model = SegmentationModel::load(ckpt);
    EvalTable table = evaluate(model, test);

    std::vector<std::pair<std::string, EvalTable>> rows{{ckpt.stem().string(), table}};
    atomic_write_file(run / "metrics_eval.csv", eval_table_csv(rows));
    atomic_write_file(run / "metrics_eval.txt", eval_table_text(rows));
    std::cout << eval_table_text(rows);

    if (error_maps) {
        Rng r(0);
        for (const auto& s : test) {
            ModelOutput out = model.forward(s.image, false, r);
            auto pred = binarize(out.probs, 0.5f);
            const char* names[2] = {"cup", "disc"};
            for (int c = 0; c < 2; ++c)
                render_error_map(pred[c], mask_channel(*s.mask, c),
                                 run / "error_maps" / (s.id + "_" + names[c] + ".png"));
        }
        std::cout << "error maps under " << (run / "error_maps").string() << "\n";
    }
    return 0;
}

int cmd_ablate(const CommonArgs& args, const RunConfig& config, bool error_maps) {
    fs::path run = resolve_run_dir(args.run_dir);
    fs::path src_ckpt = run / "ckpt_source.bin";
    require_exists(src_ckpt, "source checkpoint (run `pretrain` first)");
    require_exists(run / "cache" / "manifest.json",
                   "pseudo-label cache (run `pseudolabel` first)");
    freeze(config, run, "ablate");

    auto target_train = load_split(run, "target_train", DomainTag::target);
    auto target_test = load_split(run, "target_test", DomainTag::target);
    TrainConfig tc = config.train_config();

    SegmentationModel baseline = SegmentationModel::load(src_ckpt);
    EvalTable base_eval = evaluate(baseline, target_test);

    auto run_variant = [&](TrainConfig variant_cfg) {
        SegmentationModel m = SegmentationModel::load(src_ckpt);
        adapt(m, target_train, run / "cache", variant_cfg);
        return std::make_pair(std::move(m), EvalTable());
    };

    // local-only: all-pass masks
    TrainConfig lc = tc;
    lc.global_enabled = false;
    auto [model_l, _unused] = run_variant(lc);
    EvalTable eval_l = evaluate(model_l, target_test);

    // full model per division strategy (the configured one doubles as +LG)
    std::map<DivisionStrategy, EvalTable> by_strategy;
    std::map<DivisionStrategy, SegmentationModel> models;
    for (DivisionStrategy st : {DivisionStrategy::topk_fraction, DivisionStrategy::below_mean,
                                DivisionStrategy::threshold}) {
        TrainConfig sc = tc;
        sc.division.strategy = st;
        auto [m, _e] = run_variant(sc);
        by_strategy[st] = evaluate(m, target_test);
        models.emplace(st, std::move(m));
    }
    EvalTable eval_lg = by_strategy.at(tc.division.strategy);

    std::vector<std::pair<std::string, EvalTable>> module_rows{
        {"Baseline", base_eval}, {"Baseline+L", eval_l}, {"Baseline+LG", eval_lg}};
    atomic_write_file(run / "ablation.csv", eval_table_csv(module_rows));
    atomic_write_file(run / "ablation.txt", eval_table_text(module_rows));

    std::vector<std::pair<std::string, EvalTable>> strategy_rows{
        {"TopK", by_strategy.at(DivisionStrategy::topk_fraction)},
        {"AVG", by_strategy.at(DivisionStrategy::below_mean)},
        {"H>eta", by_strategy.at(DivisionStrategy::threshold)}};
    atomic_write_file(run / "strategies.csv", eval_table_csv(strategy_rows));
    atomic_write_file(run / "strategies.txt", eval_table_text(strategy_rows));

    std::cout << eval_table_text(module_rows) << "\n" << eval_table_text(strategy_rows);

    if (error_maps) {
        const char* names[2] = {"cup", "disc"};
        std::vector<std::pair<std::string, const SegmentationModel*>> variants{
            {"baseline", &baseline}, {"local", &model_l}, {"local_global",
                                                           &models.at(tc.division.strategy)}};
        size_t n_maps = std::min<size_t>(4, target_test.size());
        Rng r(0);
        for (const auto& [vname, model] : variants)
            for (size_t i = 0; i < n_maps; ++i) {
                const auto& s = target_test[i];
                ModelOutput out = model->forward(s.image, false, r);
                auto pred = binarize(out.probs, 0.5f);
                for (int c = 0; c < 2; ++c)
                    render_error_map(pred[c], mask_channel(*s.mask, c),
                                     run / "error_maps" / vname /
                                         (s.id + "_" + names[c] + ".png"));
            }
        std::cout << "error maps under " << (run / "error_maps").string() << "\n";
    }
    return 0;
}

int cmd_histogram(const CommonArgs& args, const RunConfig& config, int bins) {
    fs::path run = resolve_run_dir(args.run_dir);
    fs::path ckpt = run / "ckpt_source.bin";
    require_exists(ckpt, "source checkpoint (run `pretrain` first)");
    freeze(config, run, "histogram");

    auto source = load_split(run, "source", DomainTag::source);
    auto target = load_split(run, "target_train", DomainTag::target);
    SegmentationModel model = SegmentationModel::load(ckpt);
    TrainConfig tc = config.train_config();

    std::vector<EntropyRecord> records(target.size());
    parallel_for(
        static_cast<int>(target.size()),
        [&](int i) {
            Rng r(0);
            ModelOutput out = model.forward(target[i].image, false, r);
            records[i] = {target[i].id,
                          image_entropy(out.probs, tc.division.log_base, tc.division.form)};
        },
        tc.threads);
    DivisionResult division = divide(records, tc.division);
    write_division_report(run / "division_report.json", division, tc.division);

    std::set<std::string> easy_ids(division.easy_ids.begin(), division.easy_ids.end());
    std::vector<ImageSample> easy, hard;
    for (const auto& s : target)
        (easy_ids.count(s.id) ? easy : hard).push_back(s);

    auto hist_or_zero = [bins](const std::vector<ImageSample>& set) {
        return set.empty() ? std::vector<double>(bins, 0.0)
                           : grayscale_distribution(set, bins);
    };
    atomic_write_file(run / "histogram.csv",
                      histogram_csv(grayscale_distribution(source, bins), hist_or_zero(easy),
                                    hist_or_zero(hard)));
    std::cout << "easy " << easy.size() << " / hard " << hard.size() << ", histogram at "
              << (run / "histogram.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"source-free domain adaptation lab for disc/cup segmentation"};
    app.require_subcommand(1);

    CommonArgs synth_args, pretrain_args, pseudo_args, adapt_args, eval_args, ablate_args,
        hist_args;
    std::string eval_checkpoint;
    bool eval_error_maps = false, ablate_error_maps = false;
    int hist_bins = 64;

    CLI::App* synth = app.add_subcommand("synth", "generate the two-domain synthetic dataset");
    add_common(synth, synth_args);
    CLI::App* pretrain = app.add_subcommand("pretrain", "supervised source-domain pretraining");
    add_common(pretrain, pretrain_args);
    CLI::App* pseudolabel =
        app.add_subcommand("pseudolabel", "build the locally-corrected pseudo-label cache");
    add_common(pseudolabel, pseudo_args);
    CLI::App* adapt_cmd = app.add_subcommand("adapt", "source-free self-training adaptation");
    add_common(adapt_cmd, adapt_args);
    CLI::App* eval_cmd = app.add_subcommand("eval", "Dice/ASD table on target_test");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint path (default: adapted)");
    eval_cmd->add_flag("--error-maps", eval_error_maps, "write per-image error overlays");
    CLI::App* ablate = app.add_subcommand("ablate", "module and division-strategy tables");
    add_common(ablate, ablate_args);
    ablate->add_flag("--error-maps", ablate_error_maps, "write error overlays per variant");
    CLI::App* histogram =
        app.add_subcommand("histogram", "easy/hard/source grayscale distribution CSV");
    add_common(histogram, hist_args);
    histogram->add_option("--bins", hist_bins, "histogram bins");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_args, resolve_config(synth_args, synth));
        if (pretrain->parsed())
            return cmd_pretrain(pretrain_args, resolve_config(pretrain_args, pretrain));
        if (pseudolabel->parsed())
            return cmd_pseudolabel(pseudo_args, resolve_config(pseudo_args, pseudolabel));
        if (adapt_cmd->parsed())
            return cmd_adapt(adapt_args, resolve_config(adapt_args, adapt_cmd));
        if (eval_cmd->parsed())
            return cmd_eval(eval_args, resolve_config(eval_args, eval_cmd), eval_checkpoint,
                            eval_error_maps);
        if (ablate->parsed())
            return cmd_ablate(ablate_args, resolve_config(ablate_args, ablate),
                              ablate_error_maps);
        if (histogram->parsed())
            return cmd_histogram(hist_args, resolve_config(hist_args, histogram), hist_bins);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
