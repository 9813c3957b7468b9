#include "sfseg/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sfseg {

namespace {

void throw_png_error(const png_image& image, const std::string& what) {
    throw std::runtime_error(what + ": " + image.message);
}

}  // namespace

PngData read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw_png_error(image, "cannot read " + path.string());

    PngData out;
    out.h = static_cast<int>(image.height);
    out.w = static_cast<int>(image.width);
    const bool is_color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = is_color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    out.channels = is_color ? 3 : 1;
    out.bytes.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.bytes.data(), 0, nullptr))
        throw_png_error(image, "decode failed " + path.string());
    return out;
}

static void write_png_impl(const std::filesystem::path& path, int h, int w, int format,
                           const uint8_t* bytes) {
    std::filesystem::create_directories(path.parent_path());
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = static_cast<png_uint_32>(format);
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes, 0, nullptr))
        throw_png_error(image, "cannot write " + path.string());
}

void write_png_rgb(const std::filesystem::path& path, const Tensor& image) {
    if (image.c != 3) throw std::invalid_argument("write_png_rgb expects 3 channels");
    std::vector<uint8_t> bytes(image.size());
    for (size_t i = 0; i < image.size(); ++i) {
        float v = image.data[i];
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        bytes[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    write_png_impl(path, image.h, image.w, PNG_FORMAT_RGB, bytes.data());
}

void write_png_gray(const std::filesystem::path& path, int h, int w,
                    const std::vector<uint8_t>& bytes) {
    if (bytes.size() != static_cast<size_t>(h) * w)
        throw std::invalid_argument("gray payload size mismatch");
    write_png_impl(path, h, w, PNG_FORMAT_GRAY, bytes.data());
}

void write_png_rgba(const std::filesystem::path& path, int h, int w,
                    const std::vector<uint8_t>& bytes) {
    if (bytes.size() != static_cast<size_t>(h) * w * 4)
        throw std::invalid_argument("rgba payload size mismatch");
    write_png_impl(path, h, w, PNG_FORMAT_RGBA, bytes.data());
}

Tensor png_to_tensor(const PngData& png) {
    Tensor t(png.h, png.w, png.channels);
    for (size_t i = 0; i < png.bytes.size(); ++i)
        t.data[i] = static_cast<float>(png.bytes[i]) / 255.0f;
    return t;
}

}  // namespace sfseg
