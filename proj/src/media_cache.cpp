#include "infersim/media_cache.hpp"

namespace infersim {

void MediaCache::touch(Entry& e, const ContentDigest& d) {
    lru_.erase(e.lru_pos);
    lru_.push_front(d);
    e.lru_pos = lru_.begin();
}

std::optional<VisionEmbedding> MediaCache::lookup_embedding(const ContentDigest& d) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(d);
    if (it == entries_.end() || !it->second.embedding) {
        ++stats_.misses;
        return std::nullopt;
    }
    touch(it->second, d);
    ++stats_.hits;
    return it->second.embedding;
}

void MediaCache::add_bytes(Entry& e, std::uint64_t delta, const ContentDigest& d) {
    (void)d;
    e.byte_size += delta;
    stats_.bytes_resident += delta;
}

void MediaCache::store_embedding(const ContentDigest& d, const VisionEmbedding& emb) {
    std::lock_guard lock(mu_);
    if (emb.byte_size > cfg_.byte_budget) {
        ++stats_.rejected_oversize;
        return;
    }
    auto it = entries_.find(d);
    if (it == entries_.end()) {
        lru_.push_front(d);
        it = entries_.emplace(d, Entry{{}, {}, 0, 0, 0, lru_.begin()}).first;
    } else {
        touch(it->second, d);
        if (it->second.embedding) return;  // identical content, already resident
    }
    it->second.embedding = emb;
    add_bytes(it->second, emb.byte_size, d);
    evict_locked(&d);
}

std::optional<MediaCache::KvHit> MediaCache::lookup_kv(const ContentDigest& d) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(d);
    if (it == entries_.end() || !it->second.kv) {
        ++stats_.misses;
        return std::nullopt;
    }
    touch(it->second, d);
    ++stats_.hits;
    ++it->second.kv_reuses;
    return KvHit{*it->second.kv, it->second.kv_reuses == 1};
}

void MediaCache::store_kv(const ContentDigest& d, const KVState& kv) {
    std::lock_guard lock(mu_);
    if (kv.byte_size() > cfg_.byte_budget) {
        ++stats_.rejected_oversize;
        return;
    }
    auto it = entries_.find(d);
    if (it == entries_.end()) {
        lru_.push_front(d);
        it = entries_.emplace(d, Entry{{}, {}, 0, 0, 0, lru_.begin()}).first;
    } else {
        touch(it->second, d);
        if (it->second.kv) return;
    }
    it->second.kv = kv;
    add_bytes(it->second, kv.byte_size(), d);
    evict_locked(&d);
}

void MediaCache::evict_locked(const ContentDigest* fresh) {
    for (int pass = 0; pass < 2 && stats_.bytes_resident > cfg_.byte_budget; ++pass) {
        auto it = lru_.end();
        while (it != lru_.begin() && stats_.bytes_resident > cfg_.byte_budget) {
            --it;
            if (pass == 0 && fresh && *it == *fresh) continue;
            auto ent = entries_.find(*it);
            if (ent->second.pin_count > 0) continue;
            stats_.bytes_resident -= ent->second.byte_size;
            ++stats_.evictions;
            entries_.erase(ent);
            it = lru_.erase(it);
        }
    }
}

void MediaCache::pin(const ContentDigest& d) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(d);
    if (it != entries_.end()) ++it->second.pin_count;
}

void MediaCache::unpin(const ContentDigest& d) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(d);
    if (it != entries_.end() && it->second.pin_count > 0) --it->second.pin_count;
}

std::vector<MediaCache::ItemResult> MediaCache::get_or_encode(std::span<const MediaItem> items,
                                                              const Encoder& encoder,
                                                              bool reuse_enabled) {
    std::vector<ItemResult> out;
    out.reserve(items.size());
    for (const MediaItem& item : items) {
        ItemResult r;
        r.digest = content_hash(item.decoded);
        if (reuse_enabled) {
            if (auto emb = lookup_embedding(r.digest)) {
                r.embedding = *emb;
                r.hit = true;
                out.push_back(r);
                continue;
            }
        }
        r.embedding = encoder(item.decoded);
        if (reuse_enabled) store_embedding(r.digest, r.embedding);
        out.push_back(r);
    }
    return out;
}

CacheStats MediaCache::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

std::size_t MediaCache::entry_count() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

ContentDigest multimodal_kv_key(std::span<const ContentDigest> image_digests,
                                std::span<const TokenId> prompt, std::size_t text_prefix_len) {
    Sha256 h;
    for (const ContentDigest& d : image_digests) h.update(d.bytes.data(), d.bytes.size());
    for (std::size_t i = 0; i < text_prefix_len && i < prompt.size(); ++i)
        h.update_u32_be(prompt[i]);
    return h.digest();
}

double cached_turn_latency(const TurnShape& shape, const CostModel& cm, int turn, bool embed_hit,
                           bool kv_hit) {
    const double vision = cm.vision_per_patch_ms * static_cast<double>(shape.media_patches);
    const double prefill_full =
        cm.fixed_overhead_ms +
        cm.prefill_per_token_ms *
            static_cast<double>(shape.media_patches + shape.prefix_tokens + shape.suffix_tokens);
    const double prefill_suffix =
        cm.fixed_overhead_ms + cm.prefill_per_token_ms * static_cast<double>(shape.suffix_tokens);
    const double decode =
        static_cast<double>(shape.decode_tokens) * (cm.step_base_ms + cm.step_per_seq_ms);

    if (turn <= 1) return vision + prefill_full + decode;
    double latency = decode;
    latency += embed_hit ? 0.0 : vision;
    latency += kv_hit ? prefill_suffix : prefill_full;
    if (kv_hit && turn == 2) latency += cm.first_hit_overhead_ms;
    return latency;
}

}  // namespace infersim
