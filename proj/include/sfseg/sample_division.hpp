#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sfseg/dataset.hpp"
#include "sfseg/tensor.hpp"

namespace sfseg {

enum class DivisionStrategy { threshold, topk_fraction, below_mean };
enum class EntropyForm { plogp, binary };

struct DivisionConfig {
    DivisionStrategy strategy = DivisionStrategy::threshold;
    double eta = 0.044;
    double fraction = 0.3;
    double log_base = 10.0;
    EntropyForm form = EntropyForm::plogp;

    void validate() const;
};

struct EntropyRecord {
    std::string image_id;
    double entropy = 0.0;
};

struct DivisionResult {
    std::vector<std::string> easy_ids;  // ascending entropy
    std::vector<std::string> hard_ids;
    std::vector<EntropyRecord> records;  // ranked
};

// Mean over all pixels/channels of -p*log_b(p) (0 log 0 = 0); the `binary`
// form adds the complementary -(1-p)*log_b(1-p) term.
double image_entropy(const Tensor& probs, double log_base,
                     EntropyForm form = EntropyForm::plogp);

// Ascending by entropy, ties by image_id.
std::vector<EntropyRecord> rank_by_entropy(std::vector<EntropyRecord> records);

DivisionResult divide(const std::vector<EntropyRecord>& records, const DivisionConfig& config);

// Pooled luminance histogram over all pixels of all samples, normalized to
// sum 1. Bins partition [0,1].
std::vector<double> grayscale_distribution(const std::vector<ImageSample>& samples, int bins);

std::string strategy_name(DivisionStrategy s);
DivisionStrategy strategy_from_name(const std::string& name);

void write_division_report(const std::filesystem::path& path, const DivisionResult& result,
                           const DivisionConfig& config);

}  // namespace sfseg
