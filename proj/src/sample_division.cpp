#include "sfseg/sample_division.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "sfseg/util.hpp"

namespace sfseg {

void DivisionConfig::validate() const {
    if (log_base <= 1.0) throw std::invalid_argument("log_base must be > 1");
    if (strategy == DivisionStrategy::topk_fraction && !(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("fraction must be in (0,1]");
}

double image_entropy(const Tensor& probs, double log_base, EntropyForm form) {
    if (probs.empty()) throw std::invalid_argument("empty probability tensor");
    const double inv_ln_base = 1.0 / std::log(log_base);
    double total = 0.0;
    for (float pf : probs.data) {
        double p = static_cast<double>(pf);
        if (p > 0.0) total -= p * std::log(p) * inv_ln_base;
        if (form == EntropyForm::binary) {
            double q = 1.0 - p;
            if (q > 0.0) total -= q * std::log(q) * inv_ln_base;
        }
    }
    return total / static_cast<double>(probs.size());
}

std::vector<EntropyRecord> rank_by_entropy(std::vector<EntropyRecord> records) {
    std::sort(records.begin(), records.end(), [](const EntropyRecord& a, const EntropyRecord& b) {
        if (a.entropy != b.entropy) return a.entropy < b.entropy;
        return a.image_id < b.image_id;
    });
    return records;
}

DivisionResult divide(const std::vector<EntropyRecord>& records, const DivisionConfig& config) {
    config.validate();
    if (records.empty()) throw std::invalid_argument("divide: empty record list");

    DivisionResult result;
    result.records = rank_by_entropy(records);
    const size_t n = result.records.size();

    size_t easy_count = 0;
    switch (config.strategy) {
        case DivisionStrategy::threshold: {
            for (const auto& r : result.records)
                if (r.entropy <= config.eta) ++easy_count;
            break;
        }
        case DivisionStrategy::below_mean: {
            double mean = 0.0;
            for (const auto& r : result.records) mean += r.entropy;
            mean /= static_cast<double>(n);
            for (const auto& r : result.records)
                if (r.entropy < mean) ++easy_count;  // strictly lower than the average
            break;
        }
        case DivisionStrategy::topk_fraction: {
            easy_count = static_cast<size_t>(
                std::floor(config.fraction * static_cast<double>(n) + 1e-9));
            easy_count = std::max<size_t>(1, std::min(easy_count, n));
            break;
        }
    }

    for (size_t i = 0; i < n; ++i) {
        if (i < easy_count)
            result.easy_ids.push_back(result.records[i].image_id);
        else
            result.hard_ids.push_back(result.records[i].image_id);
    }
    return result;
}

std::vector<double> grayscale_distribution(const std::vector<ImageSample>& samples, int bins) {
    if (bins < 2) throw std::invalid_argument("bins must be >= 2");
    if (samples.empty()) throw std::invalid_argument("empty sample list");
    std::vector<double> hist(bins, 0.0);
    double total = 0.0;
    for (const auto& s : samples) {
        for (int y = 0; y < s.image.h; ++y)
            for (int x = 0; x < s.image.w; ++x) {
                const float* px = s.image.pixel(y, x);
                float l = luma601(px[0], px[1], px[2]);
                int bin = std::min(bins - 1, static_cast<int>(l * bins));
                hist[bin] += 1.0;
                total += 1.0;
            }
    }
    for (auto& v : hist) v /= total;
    return hist;
}

std::string strategy_name(DivisionStrategy s) {
    switch (s) {
        case DivisionStrategy::threshold: return "threshold";
        case DivisionStrategy::topk_fraction: return "topk_fraction";
        case DivisionStrategy::below_mean: return "below_mean";
    }
    return "?";
}

DivisionStrategy strategy_from_name(const std::string& name) {
    if (name == "threshold") return DivisionStrategy::threshold;
    if (name == "topk_fraction") return DivisionStrategy::topk_fraction;
    if (name == "below_mean") return DivisionStrategy::below_mean;
    throw std::invalid_argument("unknown division strategy: " + name);
}

void write_division_report(const std::filesystem::path& path, const DivisionResult& result,
                           const DivisionConfig& config) {
    nlohmann::json j;
    j["strategy"] = strategy_name(config.strategy);
    j["params"] = {{"eta", config.eta},
                   {"fraction", config.fraction},
                   {"log_base", config.log_base},
                   {"entropy_form", config.form == EntropyForm::plogp ? "plogp" : "binary"}};
    j["records"] = nlohmann::json::array();
    for (const auto& r : result.records)
        j["records"].push_back({{"id", r.image_id}, {"entropy", r.entropy}});
    j["easy_ids"] = result.easy_ids;
    j["hard_ids"] = result.hard_ids;
    atomic_write_file(path, j.dump(2) + "\n");
}

}  // namespace sfseg
