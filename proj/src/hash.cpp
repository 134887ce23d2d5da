#include "tropeval/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace tropeval {

namespace {

std::array<unsigned char, 32> sha256_raw(const std::string& data) {
    std::array<unsigned char, 32> digest{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
              EVP_DigestFinal_ex(ctx, digest.data(), &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok || len != digest.size()) throw std::runtime_error("sha256 failed");
    return digest;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
    static const char* hex = "0123456789abcdef";
    auto digest = sha256_raw(data);
    std::string out;
    out.reserve(64);
    for (unsigned char b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xF]);
    }
    return out;
}

uint64_t sha256_prefix_u64(const std::string& data) {
    auto digest = sha256_raw(data);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | digest[static_cast<size_t>(i)];
    return v;
}

}  // namespace tropeval
