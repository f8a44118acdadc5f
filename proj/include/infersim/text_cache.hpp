#pragma once

#include "infersim/cost_model.hpp"
#include "infersim/domain.hpp"

#include <cstdint>
#include <list>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace infersim {

struct TextCacheConfig {
    std::uint64_t byte_budget = 512ull << 20;
    // Snapshot spacing in tokens; 1 mirrors the per-position lookup loop
    // literally (fidelity mode for tests).
    std::uint32_t block_granularity = 16;
};

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t evictions = 0;
    std::uint64_t rejected_oversize = 0;
    std::uint64_t bytes_resident = 0;
};

struct PrefixLookup {
    std::optional<KVState> kv;
    std::size_t start = 0;  // tokens [0, start) are covered by kv

    bool full_hit(std::size_t prompt_len) const { return kv && start == prompt_len; }
};

// Digest-keyed store of KV snapshots at prefix boundaries with
// longest-prefix lookup and byte-budget LRU eviction.
class TextPrefixCache {
public:
    explicit TextPrefixCache(TextCacheConfig cfg = {}) : cfg_(cfg) {}

    const TextCacheConfig& config() const { return cfg_; }

    // Stored boundary lengths for a prompt of n tokens: every multiple of
    // the granularity up to n, plus n itself.
    std::vector<std::size_t> boundaries(std::size_t n) const;

    // Longest stored prefix of the prompt at a boundary position.
    PrefixLookup lookup_prefix(std::span<const TokenId> prompt);

    // snapshots: (prefix_len, kv at that length) pairs, boundary-aligned.
    // Entries already present are refreshed, not duplicated.
    void insert(std::span<const TokenId> prompt,
                std::span<const std::pair<std::size_t, KVState>> snapshots);

    CacheStats stats() const;
    std::size_t entry_count() const { return entries_.size(); }

private:
    struct Entry {
        KVState kv;
        std::size_t prefix_len = 0;
        std::uint64_t byte_size = 0;
        std::list<ContentDigest>::iterator lru_pos;
    };

    void touch(Entry& e, const ContentDigest& d);
    void evict_until_within_budget(const std::vector<ContentDigest>& fresh);

    TextCacheConfig cfg_;
    std::unordered_map<ContentDigest, Entry, DigestHasher> entries_;
    std::list<ContentDigest> lru_;  // front = most recently used
    CacheStats stats_;
};

// Predicted (cold prefill cost) / (hit prefill cost) under the cost model,
// where prefill cost = fixed_overhead + per_token * tokens processed.
double ttft_effect(std::size_t prefix_len, std::size_t prompt_len, const CostModel& cm);

}  // namespace infersim
