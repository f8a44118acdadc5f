#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace infersim {

// Timing parameters of the simulated backend, in milliseconds. A batched
// decode step costs step_base + batch_size * step_per_seq.
struct CostModel {
    double prefill_per_token_ms = 0.396;
    double step_base_ms = 1.765;
    double step_per_seq_ms = 0.5025;
    double vision_per_patch_ms = 0.0;
    double fixed_overhead_ms = 23.2;
    // Extra cost charged the first time a stored multimodal KV entry is
    // reused (turn 2 is slower than turn 3+ in steady state).
    double first_hit_overhead_ms = 0.0;
};

enum class TimeMode { Simulated, WallClock };

// Virtual or real clock the backend charges model costs against.
class Clock {
public:
    explicit Clock(TimeMode mode = TimeMode::Simulated) : mode_(mode) { reset(); }

    TimeMode mode() const { return mode_; }
    void reset();
    double now_ms() const;
    void charge(double ms);
    double total_charged_ms() const { return charged_; }

private:
    TimeMode mode_;
    double sim_now_ = 0.0;
    double charged_ = 0.0;
    std::chrono::steady_clock::time_point start_{};
};

struct BackendConfig {
    std::string model_id = "qwen3-0.6b-sim";
    std::uint32_t vocab_size = 50000;
    // Deterministic eos schedule: emit eos when the step hash is divisible
    // by eos_period. 0 disables eos emission entirely.
    std::uint32_t eos_period = 64;
    std::uint64_t max_context = 32768;
    std::uint32_t patch_size = 28;
    std::uint64_t kv_bytes_per_token = 131072;
    std::uint64_t embed_bytes_per_patch = 165000;
    CostModel cost;
};

// Named presets calibrated against the reference measurements the cost
// model is meant to reproduce. Throws std::invalid_argument on an unknown
// name.
BackendConfig backend_profile(const std::string& name);

// key=value profile file (one pair per line, '#' comments). Unknown keys
// are rejected. Starts from the named base profile when a "base" key is
// present, otherwise from qwen3-0.6b-sim.
BackendConfig load_profile_file(const std::string& path);

}  // namespace infersim
