#include "sfseg/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sfseg/util.hpp"

namespace sfseg {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

const char* prov_name(Provenance p) {
    switch (p) {
        case Provenance::defaulted: return "default";
        case Provenance::file: return "file";
        case Provenance::flag: return "flag";
    }
    return "?";
}

}  // namespace

RunConfig::RunConfig() {
    auto add = [this](const char* key, const char* value, const char* help) {
        entries_.push_back({key, value, Provenance::defaulted, help});
    };
    // dataset
    add("dataset.image_size", "128", "square image side, divisible by the model stride");
    add("dataset.n_source", "80", "synthetic source images");
    add("dataset.n_target", "60", "synthetic target training images");
    add("dataset.n_target_test", "40", "synthetic target test images");
    add("dataset.seed", "17", "generator seed");
    add("dataset.shift_preset", "strong", "none|mild|strong; empty uses the raw shift_* values");
    add("dataset.shift_intensity_scale", "1.0", "multiplicative intensity factor");
    add("dataset.shift_contrast_gamma", "1.0", "gamma curve exponent");
    add("dataset.shift_noise_sigma", "0.0", "additive gaussian sigma");
    add("dataset.shift_blur_radius", "0.0", "gaussian blur sigma in pixels");
    add("dataset.shift_texture_amp", "0.0", "extra fine texture amplitude");
    add("dataset.roi_margin", "0.25", "crop margin fraction around a supplied disc extent");
    // model
    add("model.feature_channels", "64", "C1, decoder feature width (multiple of 4)");
    add("model.num_classes", "2", "C2 output channels (cup, disc)");
    add("model.dropout_rate", "0.3", "dropout before the decoder");
    // local correction
    add("local.neighborhood", "3", "window size N (odd)");
    add("local.top_k", "5", "K most similar neighbors");
    add("local.include_center", "true", "center pixel participates in its own TopK");
    // division
    add("division.strategy", "threshold", "threshold|topk_fraction|below_mean");
    add("division.eta", "0.044", "entropy threshold");
    add("division.fraction", "0.3", "easy fraction for topk_fraction");
    add("division.log_base", "10", "entropy log base");
    add("division.entropy_form", "plogp", "plogp|binary");
    // global correction
    add("global.enabled", "true", "false adapts on local labels only (all-pass mask)");
    add("global.metric", "cosine", "cosine|neg_l2 prototype affinity");
    add("global.binarize_threshold", "0.5", "hard-assignment threshold");
    add("global.prototype_momentum", "0.0", "EMA momentum; 0 = per-batch prototypes");
    add("global.trace_prototypes", "false", "write prototypes.jsonl");
    // training
    add("train.batch_size", "8", "");
    add("train.learning_rate", "0.001", "fixed, no schedule");
    add("train.beta1", "0.9", "");
    add("train.beta2", "0.999", "");
    add("train.epsilon", "1e-8", "");
    add("train.epochs_source", "40", "");
    add("train.epochs_adapt", "8", "");
    add("train.num_passes", "10", "MC dropout passes");
    add("train.seed", "17", "");
    add("train.augment", "true", "augmentation during source pretraining");
    add("train.val_fraction", "0.1", "held-out fraction for best-checkpoint selection");
    add("train.threads", "0", "0 = all hardware threads");
}

const RunConfig::Entry& RunConfig::find(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.key == key) return e;
    throw std::invalid_argument("unknown config key: " + key);
}

RunConfig::Entry& RunConfig::find(const std::string& key) {
    for (auto& e : entries_)
        if (e.key == key) return e;
    throw std::invalid_argument("unknown config key: " + key);
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = line;
        size_t hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[' && s.back() == ']') {
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = strip_quotes(trim(s.substr(eq + 1)));
        if (!section.empty()) key = section + "." + key;
        set(key, value, Provenance::file);
    }
}

void RunConfig::apply_flag(const std::string& assignment) {
    std::string s = assignment;
    while (!s.empty() && s.front() == '-') s.erase(s.begin());
    size_t eq = s.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("expected --section.key=value, got: " + assignment);
    set(trim(s.substr(0, eq)), strip_quotes(trim(s.substr(eq + 1))), Provenance::flag);
}

void RunConfig::set(const std::string& key, const std::string& value, Provenance prov) {
    Entry& e = find(key);
    e.value = value;
    e.prov = prov;
}

bool RunConfig::has(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.key == key) return true;
    return false;
}

std::string RunConfig::get_string(const std::string& key) const { return find(key).value; }

long RunConfig::get_int(const std::string& key) const {
    const Entry& e = find(key);
    try {
        size_t pos = 0;
        long v = std::stol(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key " + key + " is not an integer: " + e.value);
    }
}

uint64_t RunConfig::get_u64(const std::string& key) const {
    const Entry& e = find(key);
    try {
        return std::stoull(e.value);
    } catch (const std::exception&) {
        throw std::runtime_error("config key " + key + " is not an integer: " + e.value);
    }
}

double RunConfig::get_double(const std::string& key) const {
    const Entry& e = find(key);
    try {
        size_t pos = 0;
        double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key " + key + " is not a number: " + e.value);
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    const Entry& e = find(key);
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw std::runtime_error("config key " + key + " is not a bool: " + e.value);
}

Provenance RunConfig::provenance(const std::string& key) const { return find(key).prov; }

void RunConfig::freeze_to(const std::filesystem::path& path) const {
    std::ostringstream out;
    std::string section;
    for (const auto& e : entries_) {
        std::string sec = e.key.substr(0, e.key.find('.'));
        std::string name = e.key.substr(e.key.find('.') + 1);
        if (sec != section) {
            if (!section.empty()) out << "\n";
            out << "[" << sec << "]\n";
            section = sec;
        }
        bool numeric = !e.value.empty() &&
                       e.value.find_first_not_of("0123456789.eE+-") == std::string::npos;
        bool boolean = e.value == "true" || e.value == "false";
        if (numeric || boolean)
            out << name << " = " << e.value;
        else
            out << name << " = \"" << e.value << "\"";
        out << "  # " << prov_name(e.prov) << "\n";
    }
    atomic_write_file(path, out.str());
}

SynthConfig RunConfig::synth_config() const {
    SynthConfig c;
    c.image_size = static_cast<int>(get_int("dataset.image_size"));
    c.n_source = static_cast<int>(get_int("dataset.n_source"));
    c.n_target = static_cast<int>(get_int("dataset.n_target")) +
                 static_cast<int>(get_int("dataset.n_target_test"));
    c.seed = get_u64("dataset.seed");
    std::string preset = get_string("dataset.shift_preset");
    if (!preset.empty() && preset != "custom") {
        c.shift = shift_preset(preset);
    } else {
        c.shift.intensity_scale = static_cast<float>(get_double("dataset.shift_intensity_scale"));
        c.shift.contrast_gamma = static_cast<float>(get_double("dataset.shift_contrast_gamma"));
        c.shift.noise_sigma = static_cast<float>(get_double("dataset.shift_noise_sigma"));
        c.shift.blur_radius = static_cast<float>(get_double("dataset.shift_blur_radius"));
        c.shift.texture_amp = static_cast<float>(get_double("dataset.shift_texture_amp"));
    }
    return c;
}

ModelConfig RunConfig::model_config() const {
    ModelConfig c;
    c.feature_channels = static_cast<int>(get_int("model.feature_channels"));
    c.num_classes = static_cast<int>(get_int("model.num_classes"));
    c.dropout_rate = static_cast<float>(get_double("model.dropout_rate"));
    return c;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig c;
    c.batch_size = static_cast<int>(get_int("train.batch_size"));
    c.learning_rate = get_double("train.learning_rate");
    c.beta1 = get_double("train.beta1");
    c.beta2 = get_double("train.beta2");
    c.epsilon = get_double("train.epsilon");
    c.epochs_source = static_cast<int>(get_int("train.epochs_source"));
    c.epochs_adapt = static_cast<int>(get_int("train.epochs_adapt"));
    c.num_passes = static_cast<int>(get_int("train.num_passes"));
    c.seed = get_u64("train.seed");
    c.augment = get_bool("train.augment");
    c.val_fraction = get_double("train.val_fraction");
    c.threads = static_cast<int>(get_int("train.threads"));
    c.division.strategy = strategy_from_name(get_string("division.strategy"));
    c.division.eta = get_double("division.eta");
    c.division.fraction = get_double("division.fraction");
    c.division.log_base = get_double("division.log_base");
    c.division.form = get_string("division.entropy_form") == "binary" ? EntropyForm::binary
                                                                      : EntropyForm::plogp;
    c.local.neighborhood = static_cast<int>(get_int("local.neighborhood"));
    c.local.top_k = static_cast<int>(get_int("local.top_k"));
    c.local.include_center = get_bool("local.include_center");
    c.global_enabled = get_bool("global.enabled");
    c.prototype_momentum = static_cast<float>(get_double("global.prototype_momentum"));
    c.metric = affinity_metric_from_name(get_string("global.metric"));
    c.binarize_threshold = static_cast<float>(get_double("global.binarize_threshold"));
    c.trace_prototypes = get_bool("global.trace_prototypes");
    return c;
}

}  // namespace sfseg
