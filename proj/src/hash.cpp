#include "sfseg/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

#include "sfseg/util.hpp"

namespace sfseg {

std::string sha256_hex(const void* data, size_t len) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int dlen = 0;
    if (EVP_Digest(data, len, digest.data(), &dlen, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(dlen * 2);
    for (unsigned int i = 0; i < dlen; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(const std::string& bytes) { return sha256_hex(bytes.data(), bytes.size()); }

std::string sha256_file_hex(const std::filesystem::path& path) {
    return sha256_hex(read_file_bytes(path));
}

}  // namespace sfseg
