#include "sfseg/report.hpp"

#include <sstream>
#include <stdexcept>

#include "sfseg/image_io.hpp"

namespace sfseg {

void render_error_map(const BinaryMask& pred, const BinaryMask& truth,
                      const std::filesystem::path& out) {
    if (pred.h != truth.h || pred.w != truth.w)
        throw std::invalid_argument("error map: shape mismatch");
    std::vector<uint8_t> rgba(static_cast<size_t>(pred.h) * pred.w * 4, 0);
    for (size_t i = 0; i < pred.values.size(); ++i) {
        uint8_t p = pred.values[i], t = truth.values[i];
        uint8_t* px = rgba.data() + i * 4;
        if (t && !p) {  // under-segmentation
            px[2] = 255;
            px[3] = 255;
        } else if (p && !t) {  // over-segmentation
            px[0] = 255;
            px[3] = 255;
        }
    }
    write_png_rgba(out, pred.h, pred.w, rgba);
}

std::string histogram_csv(const std::vector<double>& source, const std::vector<double>& easy,
                          const std::vector<double>& hard) {
    if (source.size() != easy.size() || source.size() != hard.size())
        throw std::invalid_argument("histogram size mismatch");
    std::ostringstream out;
    out << "bin_center,source,easy,hard\n";
    const double n = static_cast<double>(source.size());
    for (size_t i = 0; i < source.size(); ++i) {
        double center = (static_cast<double>(i) + 0.5) / n;
        out << center << ',' << source[i] << ',' << easy[i] << ',' << hard[i] << "\n";
    }
    return out.str();
}

}  // namespace sfseg
