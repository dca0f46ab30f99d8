#pragma once

#include <openssl/evp.h>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mardiflow {

// Content address of an artifact: lowercase SHA-256 hex, always 64 chars.
struct Digest {
    std::string hex;

    static constexpr std::size_t kHexLength = 64;

    bool valid() const {
        if (hex.size() != kHexLength) return false;
        for (char c : hex) {
            if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
        }
        return true;
    }

    bool operator==(const Digest&) const = default;
    auto operator<=>(const Digest&) const = default;
};

inline Digest hash_artifact(std::string_view data) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("sha256: EVP_MD_CTX_new failed");

    unsigned char raw[EVP_MAX_MD_SIZE];
    unsigned int raw_len = 0;
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
              EVP_DigestFinal_ex(ctx, raw, &raw_len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw std::runtime_error("sha256: digest computation failed");

    static const char* hexdigits = "0123456789abcdef";
    Digest d;
    d.hex.reserve(2 * raw_len);
    for (unsigned int i = 0; i < raw_len; ++i) {
        d.hex.push_back(hexdigits[raw[i] >> 4]);
        d.hex.push_back(hexdigits[raw[i] & 0x0f]);
    }
    return d;
}

inline Digest hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for hashing: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hash_artifact(data);
}

}  // namespace mardiflow
