#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace infersim {

// 32-byte SHA-256 digest used as cache key everywhere.
struct ContentDigest {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const ContentDigest&) const = default;
    std::string hex() const;
};

struct DigestHasher {
    std::size_t operator()(const ContentDigest& d) const {
        // first 8 bytes are already uniformly distributed
        std::size_t h = 0;
        for (int i = 0; i < 8; ++i) h = (h << 8) | d.bytes[static_cast<std::size_t>(i)];
        return h;
    }
};

// Incremental SHA-256. Copyable so callers can snapshot the running state
// and finalize digests at intermediate boundaries.
class Sha256 {
public:
    Sha256();
    Sha256(const Sha256& other);
    Sha256& operator=(const Sha256& other);
    ~Sha256();

    void update(const void* data, std::size_t len);
    void update_u32_be(std::uint32_t v);
    void update_u64_be(std::uint64_t v);

    // Finalizes a copy of the running state; the object stays usable.
    ContentDigest digest() const;

private:
    void* ctx_;  // EVP_MD_CTX
};

ContentDigest sha256(const void* data, std::size_t len);

// FNV-1a, 64-bit. Drives the simulated model's token function.
inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a_update(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a(const void* data, std::size_t len) {
    return fnv1a_update(kFnvOffsetBasis, data, len);
}

}  // namespace infersim
