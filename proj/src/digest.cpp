#include "infersim/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace infersim {

std::string ContentDigest::hex() const {
    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint8_t b : bytes) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0xf]);
    }
    return out;
}

namespace {
EVP_MD_CTX* new_sha256_ctx() {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 init failed");
    }
    return ctx;
}
}  // namespace

Sha256::Sha256() : ctx_(new_sha256_ctx()) {}

Sha256::Sha256(const Sha256& other) : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_MD_CTX_copy_ex(static_cast<EVP_MD_CTX*>(ctx_),
                                    static_cast<EVP_MD_CTX*>(other.ctx_)) != 1) {
        throw std::runtime_error("sha256 copy failed");
    }
}

Sha256& Sha256::operator=(const Sha256& other) {
    if (this != &other) {
        if (EVP_MD_CTX_copy_ex(static_cast<EVP_MD_CTX*>(ctx_),
                               static_cast<EVP_MD_CTX*>(other.ctx_)) != 1) {
            throw std::runtime_error("sha256 copy failed");
        }
    }
    return *this;
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(const void* data, std::size_t len) {
    if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, len) != 1) {
        throw std::runtime_error("sha256 update failed");
    }
}

void Sha256::update_u32_be(std::uint32_t v) {
    std::uint8_t buf[4] = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                           static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    update(buf, sizeof(buf));
}

void Sha256::update_u64_be(std::uint64_t v) {
    std::uint8_t buf[8];
    for (int i = 7; i >= 0; --i) {
        buf[i] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
    update(buf, sizeof(buf));
}

ContentDigest Sha256::digest() const {
    Sha256 snapshot(*this);
    ContentDigest out;
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(snapshot.ctx_), out.bytes.data(), &len) != 1 ||
        len != out.bytes.size()) {
        throw std::runtime_error("sha256 final failed");
    }
    return out;
}

ContentDigest sha256(const void* data, std::size_t len) {
    Sha256 h;
    h.update(data, len);
    return h.digest();
}

}  // namespace infersim
