#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfseg/dataset.hpp"
#include "sfseg/trainer.hpp"

namespace sfseg {

enum class Provenance { defaulted, file, flag };

// Flat key registry with TOML-style sections ([section] key = value in
// files, --section.key=value on the command line). Every key has a schema
// default; the frozen copy records where each value came from.
class RunConfig {
public:
    RunConfig();  // schema defaults

    void load_file(const std::filesystem::path& path);
    // accepts "section.key=value" (leading dashes stripped)
    void apply_flag(const std::string& assignment);
    void set(const std::string& key, const std::string& value, Provenance prov);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    long get_int(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    Provenance provenance(const std::string& key) const;

    // Loadable TOML-style dump, one "# <provenance>" comment per key.
    void freeze_to(const std::filesystem::path& path) const;

    // typed views over the registry
    SynthConfig synth_config() const;
    ModelConfig model_config() const;
    TrainConfig train_config() const;

private:
    struct Entry {
        std::string key;
        std::string value;
        Provenance prov = Provenance::defaulted;
        std::string help;
    };
    const Entry& find(const std::string& key) const;
    Entry& find(const std::string& key);
    std::vector<Entry> entries_;
};

}  // namespace sfseg
