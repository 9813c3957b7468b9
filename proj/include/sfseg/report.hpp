#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sfseg/metrics.hpp"

namespace sfseg {

// PNG overlay: blue where truth has foreground the prediction missed,
// red where the prediction exceeds the truth, transparent elsewhere.
void render_error_map(const BinaryMask& pred, const BinaryMask& truth,
                      const std::filesystem::path& out);

// bin_center,source,easy,hard rows for plotting.
std::string histogram_csv(const std::vector<double>& source, const std::vector<double>& easy,
                          const std::vector<double>& hard);

}  // namespace sfseg
