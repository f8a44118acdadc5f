#include "infersim/text_cache.hpp"

#include <algorithm>

namespace infersim {

namespace {

// Digests of the prompt's prefixes at the given ascending lengths, computed
// with one incremental pass instead of rehashing each prefix from scratch.
std::vector<ContentDigest> prefix_digests(std::span<const TokenId> prompt,
                                          const std::vector<std::size_t>& lengths) {
    std::vector<ContentDigest> out;
    out.reserve(lengths.size());
    Sha256 h;
    std::size_t consumed = 0;
    for (std::size_t len : lengths) {
        for (; consumed < len; ++consumed) h.update_u32_be(prompt[consumed]);
        out.push_back(h.digest());
    }
    return out;
}

}  // namespace

std::vector<std::size_t> TextPrefixCache::boundaries(std::size_t n) const {
    std::vector<std::size_t> out;
    const std::size_t g = cfg_.block_granularity;
    for (std::size_t len = g; len < n; len += g) out.push_back(len);
    if (n > 0) out.push_back(n);
    return out;
}

void TextPrefixCache::touch(Entry& e, const ContentDigest& d) {
    lru_.erase(e.lru_pos);
    lru_.push_front(d);
    e.lru_pos = lru_.begin();
}

PrefixLookup TextPrefixCache::lookup_prefix(std::span<const TokenId> prompt) {
    const auto lengths = boundaries(prompt.size());
    const auto digests = prefix_digests(prompt, lengths);
    for (std::size_t i = lengths.size(); i-- > 0;) {
        auto it = entries_.find(digests[i]);
        if (it == entries_.end()) continue;
        touch(it->second, it->first);
        ++stats_.hits;
        return {it->second.kv, lengths[i]};
    }
    ++stats_.misses;
    return {std::nullopt, 0};
}

void TextPrefixCache::insert(std::span<const TokenId> prompt,
                             std::span<const std::pair<std::size_t, KVState>> snapshots) {
    std::vector<std::size_t> lengths;
    lengths.reserve(snapshots.size());
    for (const auto& [len, kv] : snapshots) lengths.push_back(len);
    const auto digests = prefix_digests(prompt, lengths);

    std::vector<ContentDigest> fresh;
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        const auto& [len, kv] = snapshots[i];
        auto it = entries_.find(digests[i]);
        if (it != entries_.end()) {
            touch(it->second, it->first);
            continue;
        }
        const std::uint64_t size = kv.byte_size();
        if (size > cfg_.byte_budget) {
            ++stats_.rejected_oversize;
            continue;
        }
        lru_.push_front(digests[i]);
        entries_.emplace(digests[i], Entry{kv, len, size, lru_.begin()});
        stats_.bytes_resident += size;
        fresh.push_back(digests[i]);
    }
    evict_until_within_budget(fresh);
}

void TextPrefixCache::evict_until_within_budget(const std::vector<ContentDigest>& fresh) {
    auto is_fresh = [&](const ContentDigest& d) {
        return std::find(fresh.begin(), fresh.end(), d) != fresh.end();
    };
    // LRU first among pre-existing entries; current-call insertions are
    // only evicted if removing everything else is still not enough.
    for (int pass = 0; pass < 2 && stats_.bytes_resident > cfg_.byte_budget; ++pass) {
        auto it = lru_.end();
        while (it != lru_.begin() && stats_.bytes_resident > cfg_.byte_budget) {
            --it;
            if (pass == 0 && is_fresh(*it)) continue;
            auto ent = entries_.find(*it);
            stats_.bytes_resident -= ent->second.byte_size;
            ++stats_.evictions;
            entries_.erase(ent);
            it = lru_.erase(it);
        }
    }
}

CacheStats TextPrefixCache::stats() const { return stats_; }

double ttft_effect(std::size_t prefix_len, std::size_t prompt_len, const CostModel& cm) {
    const double cold =
        cm.fixed_overhead_ms + cm.prefill_per_token_ms * static_cast<double>(prompt_len);
    const double hit = cm.fixed_overhead_ms +
                       cm.prefill_per_token_ms * static_cast<double>(prompt_len - prefix_len);
    return cold / hit;
}

}  // namespace infersim
