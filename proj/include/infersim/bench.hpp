#pragma once

#include "infersim/scheduler.hpp"
#include "infersim/tokenizer.hpp"

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace infersim::bench {

struct BenchOptions {
    std::string scenario;
    std::string target;  // http://host:port; empty = embedded engine
    std::string profile = "qwen3-0.6b-sim";
    std::string out_path;
    std::string plot_path;  // empty = no plot
    std::uint64_t seed = 1;
    int warmup = 3;
    int iters = 10;
};

struct BenchRow {
    std::string scenario;
    std::string params;
    double latency_ms = 0.0;
    double tokens_per_sec = 0.0;
    double requests_per_sec = 0.0;
    double speedup = 1.0;
};

// Median of a sample; speedups are always ratios of medians, never means.
double median(std::vector<double> values);

// Seeded noise raster, the procedural stand-in for test images.
CanonicalImage random_raster(std::uint32_t width, std::uint32_t height, std::mt19937_64& rng);

// Single-owner embedded engine: backend + caches + scheduler driven
// synchronously, so simulated-clock runs are fully deterministic.
class EmbeddedRunner {
public:
    EmbeddedRunner(const BackendConfig& cfg, CacheToggles toggles = {},
                   SchedulerConfig sched = {}, TextCacheConfig text = {},
                   MediaCacheConfig media = {});

    // Submits and runs to completion; returns the result.
    RequestResult run(GenerationRequest req);

    Scheduler& scheduler() { return sched_; }
    SimulatedBackend& backend() { return backend_; }
    const ToyTokenizer& tokenizer() const { return tokenizer_; }

private:
    SimulatedBackend backend_;
    TextPrefixCache text_cache_;
    MediaCache media_cache_;
    Scheduler sched_;
    ToyTokenizer tokenizer_;
};

std::vector<BenchRow> run_scenario(const BenchOptions& opts);

std::vector<BenchRow> run_concurrency(const BenchOptions& opts);
std::vector<BenchRow> run_text_prefix(const BenchOptions& opts);
std::vector<BenchRow> run_multiturn_image(const BenchOptions& opts);
std::vector<BenchRow> run_video_frames(const BenchOptions& opts);
std::vector<BenchRow> run_resolution_sweep(const BenchOptions& opts);
std::vector<BenchRow> run_cache_ablation(const BenchOptions& opts);

// CSV with a fixed header plus a summary table on `summary`. Throws on an
// empty row set; no file is written in that case.
void emit_report(const std::vector<BenchRow>& rows, std::ostream& summary,
                 const std::string& csv_path);

std::string to_csv(const std::vector<BenchRow>& rows);

// Minimal SVG line chart of speedup per row, in row order.
void write_svg_plot(const std::vector<BenchRow>& rows, const std::string& path);

}  // namespace infersim::bench
