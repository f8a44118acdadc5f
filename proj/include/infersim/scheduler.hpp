#pragma once

#include "infersim/backend.hpp"
#include "infersim/media_cache.hpp"
#include "infersim/text_cache.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace infersim {

struct SchedulerConfig {
    std::size_t max_batch_size = 16;
    std::size_t queue_limit = 0;  // 0 = unbounded
};

struct CacheToggles {
    bool text_cache = true;
    bool media_cache = true;
    bool kv_reuse = true;
    bool embed_reuse = true;
};

enum class FinishReason { Stop, Length, Error };

enum class SlotState { Prefilling, Decoding, Complete };

struct SlotEvent {
    std::uint64_t request_id = 0;
    std::optional<TokenId> token;
    bool done = false;
    FinishReason finish = FinishReason::Length;
    std::string error;
};

struct RequestResult {
    std::vector<TokenId> output;
    FinishReason finish = FinishReason::Length;
    bool done = false;
    std::string error;
    std::uint64_t admitted_at_step = 0;   // step index of the first decode step
    std::uint64_t completed_at_step = 0;  // step index of the final decode step
    double arrival_ms = 0.0;
    double first_token_ms = -1.0;
    double completed_ms = 0.0;
    std::size_t prompt_text_tokens = 0;
};

// Continuous-batching core: admits queued requests at token boundaries,
// steps the whole active batch one token at a time, retires completed
// slots immediately. Single-threaded by contract; the engine wraps it in
// a worker thread.
class Scheduler {
public:
    using EventSink = std::function<void(const SlotEvent&)>;

    Scheduler(SchedulerConfig cfg, SimulatedBackend& backend, TextPrefixCache* text_cache = nullptr,
              MediaCache* media_cache = nullptr, CacheToggles toggles = {});

    // Non-blocking enqueue; throws QueueFull/ShuttingDown.
    std::uint64_t submit(GenerationRequest req, EventSink sink = {});

    // One loop body: admit + prefill, one batched decode step, retire.
    // Returns false when there was nothing to do.
    bool iteration();

    void run_until_idle();

    bool idle() const { return pending_.empty() && batch_.empty(); }
    std::size_t pending_count() const { return pending_.size(); }
    std::size_t active_count() const { return batch_.size(); }
    std::uint64_t step_count() const { return step_count_; }

    void begin_shutdown() { shutting_down_ = true; }
    bool shutting_down() const { return shutting_down_; }

    const RequestResult& result(std::uint64_t id) const;

    SimulatedBackend& backend() { return *backend_; }

private:
    struct Slot {
        GenerationRequest request;
        KVState kv;
        std::vector<TokenId>* output = nullptr;  // points into the result entry
        EventSink sink;
        SlotState state = SlotState::Prefilling;
        std::uint64_t admitted_at_step = 0;
        std::vector<ContentDigest> pinned;
    };

    void admit_pending();
    void prefill_slot(Slot& slot);
    void prefill_text(Slot& slot);
    void prefill_multimodal(Slot& slot);
    void decode_step();
    void retire_completed();
    void finish_slot(Slot& slot, FinishReason reason, const std::string& error = {});

    SchedulerConfig cfg_;
    SimulatedBackend* backend_;
    TextPrefixCache* text_cache_;
    MediaCache* media_cache_;
    CacheToggles toggles_;

    // FIFO by arrival time, ties broken by id.
    std::map<std::pair<double, std::uint64_t>, std::pair<GenerationRequest, EventSink>> pending_;
    std::vector<Slot> batch_;
    std::unordered_map<std::uint64_t, RequestResult> results_;
    std::uint64_t next_id_ = 1;
    std::uint64_t step_count_ = 0;
    bool shutting_down_ = false;
};

}  // namespace infersim
