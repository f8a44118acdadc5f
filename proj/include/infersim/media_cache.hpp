#pragma once

#include "infersim/domain.hpp"
#include "infersim/text_cache.hpp"  // CacheStats

#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace infersim {

struct MediaCacheConfig {
    std::uint64_t byte_budget = 512ull << 20;
};

// Content-addressed cache for vision embeddings (keyed by pixel digest)
// and multimodal KV snapshots (keyed by a composite digest over the image
// digests plus the prompt tokens up to the last image). Byte-budget LRU;
// entries pinned by the active batch are never evicted.
class MediaCache {
public:
    explicit MediaCache(MediaCacheConfig cfg = {}) : cfg_(cfg) {}

    const MediaCacheConfig& config() const { return cfg_; }

    std::optional<VisionEmbedding> lookup_embedding(const ContentDigest& d);
    void store_embedding(const ContentDigest& d, const VisionEmbedding& emb);

    struct KvHit {
        KVState kv;
        bool first_reuse = false;
    };
    std::optional<KvHit> lookup_kv(const ContentDigest& d);
    void store_kv(const ContentDigest& d, const KVState& kv);

    void pin(const ContentDigest& d);
    void unpin(const ContentDigest& d);

    struct ItemResult {
        VisionEmbedding embedding;
        ContentDigest digest;
        bool hit = false;
    };
    using Encoder = std::function<VisionEmbedding(const CanonicalImage&)>;

    // Per-item embedding lookup over decoded media, invoking the encoder
    // exactly once per missing pixel content. With reuse_enabled=false the
    // encoder always runs and nothing is read or stored.
    std::vector<ItemResult> get_or_encode(std::span<const MediaItem> items, const Encoder& encoder,
                                          bool reuse_enabled = true);

    CacheStats stats() const;
    std::size_t entry_count() const;

private:
    struct Entry {
        std::optional<VisionEmbedding> embedding;
        std::optional<KVState> kv;
        std::uint64_t byte_size = 0;
        std::uint64_t kv_reuses = 0;
        int pin_count = 0;
        std::list<ContentDigest>::iterator lru_pos;
    };

    void touch(Entry& e, const ContentDigest& d);
    void add_bytes(Entry& e, std::uint64_t delta, const ContentDigest& d);
    void evict_locked(const ContentDigest* fresh);

    MediaCacheConfig cfg_;
    mutable std::mutex mu_;
    std::unordered_map<ContentDigest, Entry, DigestHasher> entries_;
    std::list<ContentDigest> lru_;
    CacheStats stats_;
};

// Composite key for multimodal KV reuse: all image digests in order plus
// the prompt tokens up to (not including) position `text_prefix_len`.
ContentDigest multimodal_kv_key(std::span<const ContentDigest> image_digests,
                                std::span<const TokenId> prompt, std::size_t text_prefix_len);

// Cost-model latency prediction for one conversation turn about the same
// media (the decomposition behind the cache-ablation comparison).
struct TurnShape {
    std::uint64_t media_patches = 0;   // total patches across images/frames
    std::uint64_t prefix_tokens = 0;   // text tokens up to the last image
    std::uint64_t suffix_tokens = 0;   // text tokens after the last image
    std::uint64_t decode_tokens = 0;
};

double cached_turn_latency(const TurnShape& shape, const CostModel& cm, int turn,
                           bool embed_hit = true, bool kv_hit = true);

}  // namespace infersim
