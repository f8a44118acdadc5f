#include "infersim/scheduler.hpp"

#include "infersim/errors.hpp"

#include <algorithm>

namespace infersim {

Scheduler::Scheduler(SchedulerConfig cfg, SimulatedBackend& backend, TextPrefixCache* text_cache,
                     MediaCache* media_cache, CacheToggles toggles)
    : cfg_(cfg), backend_(&backend), text_cache_(text_cache), media_cache_(media_cache),
      toggles_(toggles) {
    if (cfg_.max_batch_size < 1) cfg_.max_batch_size = 1;
}

std::uint64_t Scheduler::submit(GenerationRequest req, EventSink sink) {
    if (shutting_down_) throw ShuttingDown("scheduler is shutting down");
    if (req.prompt_tokens.empty() && req.media.empty())
        throw std::invalid_argument("request has neither prompt tokens nor media");
    if (req.max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
    if (cfg_.queue_limit > 0 && pending_.size() >= cfg_.queue_limit)
        throw QueueFull("pending queue is full");

    if (req.id == 0) req.id = next_id_++;
    else next_id_ = std::max(next_id_, req.id + 1);
    if (req.arrival_time_ms < 0) req.arrival_time_ms = backend_->clock().now_ms();

    RequestResult res;
    res.arrival_ms = req.arrival_time_ms;
    res.prompt_text_tokens = req.prompt_tokens.size();
    const std::uint64_t id = req.id;
    results_[id] = std::move(res);
    pending_.emplace(std::make_pair(req.arrival_time_ms, id),
                     std::make_pair(std::move(req), std::move(sink)));
    return id;
}

void Scheduler::admit_pending() {
    while (batch_.size() < cfg_.max_batch_size && !pending_.empty()) {
        auto node = pending_.extract(pending_.begin());
        Slot slot;
        slot.request = std::move(node.mapped().first);
        slot.sink = std::move(node.mapped().second);
        slot.output = &results_[slot.request.id].output;
        try {
            prefill_slot(slot);
            slot.state = SlotState::Decoding;
            slot.admitted_at_step = step_count_ + 1;  // first decode step it joins
            results_[slot.request.id].admitted_at_step = slot.admitted_at_step;
            batch_.push_back(std::move(slot));
        } catch (const std::exception& e) {
            finish_slot(slot, FinishReason::Error, e.what());
        }
    }
}

void Scheduler::prefill_slot(Slot& slot) {
    backend_->charge_prefill_overhead();
    if (slot.request.media.empty()) prefill_text(slot);
    else prefill_multimodal(slot);
}

void Scheduler::prefill_text(Slot& slot) {
    const auto& tokens = slot.request.prompt_tokens;
    if (!text_cache_ || !toggles_.text_cache) {
        slot.kv = backend_->prefill(tokens);
        return;
    }
    PrefixLookup hit = text_cache_->lookup_prefix(tokens);
    KVState kv = hit.kv ? *hit.kv : backend_->fresh_state();
    std::size_t pos = hit.start;
    if (pos < tokens.size()) {
        // Absorb the remainder block by block, snapshotting each stored
        // boundary so the extended prefix becomes reusable.
        std::vector<std::pair<std::size_t, KVState>> snapshots;
        for (std::size_t b : text_cache_->boundaries(tokens.size())) {
            if (b <= pos) continue;
            kv = backend_->prefill(std::span(tokens).subspan(pos, b - pos), kv);
            pos = b;
            snapshots.emplace_back(b, kv);
        }
        text_cache_->insert(tokens, snapshots);
    }
    slot.kv = kv;
}

void Scheduler::prefill_multimodal(Slot& slot) {
    auto& req = slot.request;
    std::stable_sort(req.media.begin(), req.media.end(),
                     [](const MediaItem& a, const MediaItem& b) { return a.position < b.position; });

    const bool use_media_cache = media_cache_ && toggles_.media_cache;
    const bool embed_reuse = use_media_cache && toggles_.embed_reuse;
    const bool kv_reuse = use_media_cache && toggles_.kv_reuse;

    auto encoder = [&](const CanonicalImage& img) { return backend_->encode_image(img); };

    std::vector<MediaCache::ItemResult> encoded;
    if (use_media_cache) {
        encoded = media_cache_->get_or_encode(req.media, encoder, embed_reuse);
    } else {
        encoded.reserve(req.media.size());
        for (const auto& item : req.media) {
            MediaCache::ItemResult r;
            r.digest = content_hash(item.decoded);
            r.embedding = encoder(item.decoded);
            encoded.push_back(r);
        }
    }

    std::vector<ContentDigest> image_digests;
    image_digests.reserve(encoded.size());
    for (const auto& r : encoded) image_digests.push_back(r.digest);

    const auto& tokens = req.prompt_tokens;
    const std::size_t last_pos = req.media.back().position;
    const ContentDigest kv_key = multimodal_kv_key(image_digests, tokens, last_pos);

    KVState kv;
    bool kv_hit = false;
    if (kv_reuse) {
        if (auto hit = media_cache_->lookup_kv(kv_key)) {
            kv = hit->kv;
            kv_hit = true;
            if (hit->first_reuse) backend_->charge(backend_->config().cost.first_hit_overhead_ms);
        }
    }
    if (!kv_hit) {
        kv = backend_->fresh_state();
        std::size_t pos = 0;
        for (std::size_t i = 0; i < req.media.size(); ++i) {
            const std::size_t at = req.media[i].position;
            kv = backend_->prefill(std::span(tokens).subspan(pos, at - pos), kv);
            pos = at;
            kv = backend_->prefill_embedding(encoded[i].embedding, kv);
        }
        if (kv_reuse) media_cache_->store_kv(kv_key, kv);
    }
    if (use_media_cache) {
        for (const auto& d : image_digests) {
            media_cache_->pin(d);
            slot.pinned.push_back(d);
        }
        media_cache_->pin(kv_key);
        slot.pinned.push_back(kv_key);
    }
    slot.kv = backend_->prefill(std::span(tokens).subspan(last_pos), kv);
}

void Scheduler::decode_step() {
    if (batch_.empty()) return;
    ++step_count_;
    backend_->charge_batched_step(batch_.size());
    const double now = backend_->clock().now_ms();
    for (Slot& slot : batch_) {
        auto& res = results_[slot.request.id];
        try {
            backend_->check_context(slot.kv, 1);
        } catch (const std::exception& e) {
            slot.state = SlotState::Complete;
            finish_slot(slot, FinishReason::Error, e.what());
            continue;
        }
        TokenId t = backend_->next_token(slot.kv, slot.request.eos_token);
        slot.kv.absorb_token(t);
        slot.output->push_back(t);
        if (res.first_token_ms < 0) res.first_token_ms = now;
        if (slot.sink) slot.sink(SlotEvent{slot.request.id, t, false, FinishReason::Length, {}});
        if (t == slot.request.eos_token) {
            slot.state = SlotState::Complete;
            finish_slot(slot, FinishReason::Stop);
        } else if (slot.output->size() >= slot.request.max_new_tokens) {
            slot.state = SlotState::Complete;
            finish_slot(slot, FinishReason::Length);
        }
    }
}

void Scheduler::finish_slot(Slot& slot, FinishReason reason, const std::string& error) {
    auto& res = results_[slot.request.id];
    res.finish = reason;
    res.error = error;
    res.done = true;
    res.completed_at_step = step_count_;
    res.completed_ms = backend_->clock().now_ms();
    if (media_cache_) {
        for (const auto& d : slot.pinned) media_cache_->unpin(d);
    }
    slot.pinned.clear();
    if (slot.sink) slot.sink(SlotEvent{slot.request.id, std::nullopt, true, reason, error});
}

void Scheduler::retire_completed() {
    std::erase_if(batch_, [](const Slot& s) { return s.state == SlotState::Complete; });
}

bool Scheduler::iteration() {
    if (pending_.empty() && batch_.empty()) return false;
    admit_pending();
    decode_step();
    retire_completed();
    return true;
}

void Scheduler::run_until_idle() {
    while (iteration()) {
    }
}

const RequestResult& Scheduler::result(std::uint64_t id) const {
    auto it = results_.find(id);
    if (it == results_.end()) throw std::out_of_range("unknown request id");
    return it->second;
}

}  // namespace infersim
