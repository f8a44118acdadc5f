#include "infersim/engine.hpp"

#include "infersim/errors.hpp"

namespace infersim {

Engine::Engine(EngineConfig cfg)
    : cfg_(cfg), tokenizer_(cfg.backend.vocab_size), backend_(cfg.backend, cfg.time_mode),
      text_cache_(cfg.text_cache), media_cache_(cfg.media_cache),
      scheduler_(cfg.scheduler, backend_, &text_cache_, &media_cache_, cfg.toggles) {
    worker_ = std::thread(&Engine::worker_loop, this);
}

Engine::~Engine() { shutdown(); }

std::uint64_t Engine::submit(GenerationRequest req, Scheduler::EventSink sink) {
    std::unique_lock lock(mu_);
    if (stop_) throw ShuttingDown("engine is shutting down");
    if (req.prompt_tokens.empty() && req.media.empty())
        throw std::invalid_argument("request has neither prompt tokens nor media");
    if (req.max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
    req.id = next_id_++;
    // Arrival order is a monotonic sequence: FIFO admission matches
    // submission order in both time modes.
    req.arrival_time_ms = arrival_seq_++;
    const std::uint64_t id = req.id;
    intake_.emplace_back(std::move(req), std::move(sink));
    lock.unlock();
    work_cv_.notify_one();
    return id;
}

RequestResult Engine::wait(std::uint64_t id) {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [&] { return done_.count(id) > 0; });
    return done_.at(id);
}

Engine::CacheStatsSnapshot Engine::cache_stats() const {
    std::lock_guard lock(mu_);
    return {text_stats_snapshot_, media_cache_.stats()};
}

void Engine::shutdown() {
    {
        std::lock_guard lock(mu_);
        if (stop_) {
            if (worker_.joinable()) worker_.join();
            return;
        }
        stop_ = true;
    }
    work_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

void Engine::worker_loop() {
    for (;;) {
        std::vector<std::pair<GenerationRequest, Scheduler::EventSink>> arrivals;
        {
            std::unique_lock lock(mu_);
            work_cv_.wait(lock, [&] { return stop_ || !intake_.empty() || !scheduler_.idle(); });
            if (stop_ && intake_.empty() && scheduler_.idle()) return;
            arrivals.swap(intake_);
        }
        for (auto& [req, sink] : arrivals) {
            const std::uint64_t id = req.id;
            Scheduler::EventSink user_sink = std::move(sink);
            auto wrapped = [this, user_sink](const SlotEvent& ev) {
                if (user_sink) user_sink(ev);
                if (ev.done) {
                    std::lock_guard lock(mu_);
                    done_[ev.request_id] = scheduler_.result(ev.request_id);
                    done_cv_.notify_all();
                }
            };
            try {
                scheduler_.submit(std::move(req), std::move(wrapped));
            } catch (const std::exception& e) {
                std::lock_guard lock(mu_);
                RequestResult res;
                res.done = true;
                res.finish = FinishReason::Error;
                res.error = e.what();
                done_[id] = std::move(res);
                done_cv_.notify_all();
            }
        }
        // Run decode rounds, re-checking intake between iterations so new
        // arrivals join at token boundaries.
        for (;;) {
            if (!scheduler_.iteration()) break;
            std::lock_guard lock(mu_);
            text_stats_snapshot_ = text_cache_.stats();
            if (!intake_.empty() || stop_) break;
        }
        {
            std::lock_guard lock(mu_);
            text_stats_snapshot_ = text_cache_.stats();
        }
    }
}

}  // namespace infersim
