#pragma once

#include "infersim/cost_model.hpp"
#include "infersim/domain.hpp"

#include <optional>
#include <span>
#include <vector>

namespace infersim {

// Deterministic simulated model backend. Token generation is a pure
// function of the absorbed prefix; all compute costs are charged to the
// clock, so timing claims can be checked in closed form.
class SimulatedBackend {
public:
    explicit SimulatedBackend(BackendConfig cfg, TimeMode mode = TimeMode::Simulated)
        : cfg_(std::move(cfg)), clock_(mode) {}

    const BackendConfig& config() const { return cfg_; }
    Clock& clock() { return clock_; }
    const Clock& clock() const { return clock_; }

    KVState fresh_state() const {
        KVState kv;
        kv.bytes_per_token = cfg_.kv_bytes_per_token;
        return kv;
    }

    // Absorbs new tokens, charging prefill_per_token per token. Throws
    // ContextOverflow past max_context. Empty spans are free no-ops.
    KVState prefill(std::span<const TokenId> tokens, std::optional<KVState> start = {});

    // Absorbs an already-encoded image, charging prefill cost per patch
    // position it occupies.
    KVState prefill_embedding(const VisionEmbedding& emb, std::optional<KVState> start = {});

    // Per-request prefill setup cost, charged once by the scheduler.
    void charge_prefill_overhead() { clock_.charge(cfg_.cost.fixed_overhead_ms); }
    void charge(double ms) { clock_.charge(ms); }

    // Next token for this state; no time charged (batched_step charges).
    // Emits eos instead when the step hash lands on the eos schedule.
    TokenId next_token(const KVState& kv, TokenId eos_token) const;

    // Convenience: next token plus the advanced state.
    std::pair<TokenId, KVState> generate_token(const KVState& kv, TokenId eos_token) const;

    // Deterministic stub vision encoder; charges vision_per_patch per patch.
    VisionEmbedding encode_image(const CanonicalImage& img);

    // One decode step for a batch: semantically generate_token per slot,
    // charged once as step_base + b * step_per_seq. Slots past max_context
    // throw ContextOverflow when advanced individually by the caller.
    void charge_batched_step(std::size_t batch_size) {
        clock_.charge(cfg_.cost.step_base_ms +
                      static_cast<double>(batch_size) * cfg_.cost.step_per_seq_ms);
    }

    void check_context(const KVState& kv, std::uint64_t extra) const;

private:
    BackendConfig cfg_;
    Clock clock_;
};

}  // namespace infersim
