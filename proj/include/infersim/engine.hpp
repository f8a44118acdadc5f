#pragma once

#include "infersim/scheduler.hpp"
#include "infersim/tokenizer.hpp"

#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>

namespace infersim {

struct EngineConfig {
    BackendConfig backend;
    TimeMode time_mode = TimeMode::Simulated;
    SchedulerConfig scheduler;
    CacheToggles toggles;
    TextCacheConfig text_cache;
    MediaCacheConfig media_cache;
};

// Threaded serving engine: a worker thread owns the scheduler and caches
// exclusively; clients submit across a locked intake queue and wait on
// per-request completion. Sinks run on the worker thread.
class Engine {
public:
    explicit Engine(EngineConfig cfg);
    ~Engine();

    const EngineConfig& config() const { return cfg_; }
    const ToyTokenizer& tokenizer() const { return tokenizer_; }

    // Thread-safe; throws ShuttingDown after shutdown started. Assigns the
    // request id and arrival order.
    std::uint64_t submit(GenerationRequest req, Scheduler::EventSink sink = {});

    // Blocks until the request completes; returns a copy of its result.
    RequestResult wait(std::uint64_t id);

    struct CacheStatsSnapshot {
        CacheStats text;
        CacheStats media;
    };
    CacheStatsSnapshot cache_stats() const;

    void shutdown();

private:
    void worker_loop();

    EngineConfig cfg_;
    ToyTokenizer tokenizer_;
    SimulatedBackend backend_;
    TextPrefixCache text_cache_;
    MediaCache media_cache_;
    Scheduler scheduler_;

    mutable std::mutex mu_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    std::vector<std::pair<GenerationRequest, Scheduler::EventSink>> intake_;
    std::unordered_map<std::uint64_t, RequestResult> done_;
    CacheStats text_stats_snapshot_;
    std::uint64_t next_id_ = 1;
    double arrival_seq_ = 0.0;
    bool stop_ = false;
    std::thread worker_;
};

}  // namespace infersim
