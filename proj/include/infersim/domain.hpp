#pragma once

#include "infersim/digest.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace infersim {

using TokenId = std::uint32_t;

// Decoded image: row-major RGB, 8 bits per channel, alpha already composited.
struct CanonicalImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height bytes

    bool valid() const {
        return width >= 1 && height >= 1 &&
               pixels.size() == static_cast<std::size_t>(3) * width * height;
    }
};

enum class MediaSourceKind { FilePath, Base64, Url };

struct MediaItem {
    MediaSourceKind kind = MediaSourceKind::FilePath;
    std::string source;
    CanonicalImage decoded;
    // Index into prompt_tokens before which this image is absorbed.
    std::size_t position = 0;
};

struct GenerationRequest {
    std::uint64_t id = 0;
    std::vector<TokenId> prompt_tokens;
    std::vector<MediaItem> media;
    std::uint32_t max_new_tokens = 16;
    TokenId eos_token = 49999;
    double arrival_time_ms = 0.0;
    bool stream = false;
};

// Output of the stub vision encoder. Payload is summarized by a digest;
// sizes are what the caches account for.
struct VisionEmbedding {
    std::uint32_t patch_count = 0;
    std::uint64_t values_digest = 0;
    std::uint64_t byte_size = 0;
};

// Abstract replayable KV state: a running digest over everything absorbed,
// in order. Absorbing the same content from the same start state always
// reproduces the same state, which is what makes cache reuse testable by
// output equality.
struct KVState {
    std::uint64_t state_digest = kFnvOffsetBasis;
    std::uint64_t token_count = 0;
    std::uint64_t bytes_per_token = 0;

    std::uint64_t byte_size() const { return token_count * bytes_per_token; }

    void absorb_token(TokenId t) {
        std::uint8_t buf[4] = {static_cast<std::uint8_t>(t >> 24), static_cast<std::uint8_t>(t >> 16),
                               static_cast<std::uint8_t>(t >> 8), static_cast<std::uint8_t>(t)};
        state_digest = fnv1a_update(state_digest, buf, sizeof(buf));
        ++token_count;
    }

    void absorb_embedding(const VisionEmbedding& emb) {
        std::uint8_t buf[12];
        std::uint64_t v = emb.values_digest;
        for (int i = 7; i >= 0; --i) {
            buf[i] = static_cast<std::uint8_t>(v & 0xff);
            v >>= 8;
        }
        std::uint32_t p = emb.patch_count;
        for (int i = 11; i >= 8; --i) {
            buf[i] = static_cast<std::uint8_t>(p & 0xff);
            p >>= 8;
        }
        state_digest = fnv1a_update(state_digest, buf, sizeof(buf));
        token_count += emb.patch_count;
    }

    bool operator==(const KVState&) const = default;
};

// SHA-256 over (width, height as 8-byte big-endian) followed by raw pixels.
ContentDigest content_hash(const CanonicalImage& img);

// SHA-256 over token ids serialized as 4-byte big-endian each.
// Throws EmptySequence on an empty span.
ContentDigest token_prefix_hash(std::span<const TokenId> tokens);

}  // namespace infersim
