#include "infersim/backend.hpp"

#include "infersim/errors.hpp"

#include <string>

namespace infersim {

void SimulatedBackend::check_context(const KVState& kv, std::uint64_t extra) const {
    if (kv.token_count + extra > cfg_.max_context) {
        throw ContextOverflow("context length " + std::to_string(kv.token_count + extra) +
                              " exceeds max " + std::to_string(cfg_.max_context));
    }
}

KVState SimulatedBackend::prefill(std::span<const TokenId> tokens, std::optional<KVState> start) {
    KVState kv = start ? *start : fresh_state();
    if (tokens.empty()) return kv;
    check_context(kv, tokens.size());
    for (TokenId t : tokens) kv.absorb_token(t);
    clock_.charge(cfg_.cost.prefill_per_token_ms * static_cast<double>(tokens.size()));
    return kv;
}

KVState SimulatedBackend::prefill_embedding(const VisionEmbedding& emb,
                                            std::optional<KVState> start) {
    KVState kv = start ? *start : fresh_state();
    check_context(kv, emb.patch_count);
    kv.absorb_embedding(emb);
    clock_.charge(cfg_.cost.prefill_per_token_ms * static_cast<double>(emb.patch_count));
    return kv;
}

TokenId SimulatedBackend::next_token(const KVState& kv, TokenId eos_token) const {
    std::uint8_t buf[8];
    std::uint64_t v = kv.state_digest;
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
    std::uint64_t h = fnv1a(buf, sizeof(buf));
    if (cfg_.eos_period != 0 && h % cfg_.eos_period == 0) return eos_token;
    return static_cast<TokenId>(h % cfg_.vocab_size);
}

std::pair<TokenId, KVState> SimulatedBackend::generate_token(const KVState& kv,
                                                             TokenId eos_token) const {
    check_context(kv, 1);
    TokenId t = next_token(kv, eos_token);
    KVState next = kv;
    next.absorb_token(t);
    return {t, next};
}

VisionEmbedding SimulatedBackend::encode_image(const CanonicalImage& img) {
    const std::uint32_t ps = cfg_.patch_size;
    const std::uint32_t patches = ((img.width + ps - 1) / ps) * ((img.height + ps - 1) / ps);
    VisionEmbedding emb;
    emb.patch_count = patches;
    ContentDigest d = content_hash(img);
    emb.values_digest = fnv1a(d.bytes.data(), d.bytes.size());
    emb.byte_size = static_cast<std::uint64_t>(patches) * cfg_.embed_bytes_per_patch;
    clock_.charge(cfg_.cost.vision_per_patch_ms * static_cast<double>(patches));
    return emb;
}

}  // namespace infersim
