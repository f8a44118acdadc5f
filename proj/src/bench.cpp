#include "infersim/bench.hpp"

#include "infersim/errors.hpp"
#include "infersim/image.hpp"
#include "infersim/streaming.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

namespace infersim::bench {

using json = nlohmann::json;

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CanonicalImage random_raster(std::uint32_t width, std::uint32_t height, std::mt19937_64& rng) {
    CanonicalImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(3) * width * height);
    for (auto& b : img.pixels) b = static_cast<std::uint8_t>(rng() & 0xff);
    return img;
}

EmbeddedRunner::EmbeddedRunner(const BackendConfig& cfg, CacheToggles toggles,
                               SchedulerConfig sched, TextCacheConfig text, MediaCacheConfig media)
    : backend_(cfg, TimeMode::Simulated), text_cache_(text), media_cache_(media),
      sched_(sched, backend_, &text_cache_, &media_cache_, toggles), tokenizer_(cfg.vocab_size) {}

RequestResult EmbeddedRunner::run(GenerationRequest req) {
    req.arrival_time_ms = -1.0;
    const std::uint64_t id = sched_.submit(std::move(req));
    sched_.run_until_idle();
    return sched_.result(id);
}

namespace {

BackendConfig bench_backend(const BenchOptions& opts) {
    BackendConfig cfg = (opts.profile.find('/') != std::string::npos ||
                         opts.profile.find(".conf") != std::string::npos)
                            ? load_profile_file(opts.profile)
                            : backend_profile(opts.profile);
    // Fixed-length outputs keep throughput ratios exact.
    cfg.eos_period = 0;
    return cfg;
}

double latency_of(const RequestResult& r) { return r.completed_ms - r.arrival_ms; }
double ttft_of(const RequestResult& r) { return r.first_token_ms - r.arrival_ms; }

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

// Multi-turn conversation about one piece of media, using the serving
// chat template. Answers are fed back into history as re-tokenized text.
class MediaConversation {
public:
    MediaConversation(const ToyTokenizer& tok, std::vector<CanonicalImage> frames)
        : tok_(&tok), frames_(std::move(frames)) {}

    GenerationRequest turn_request(const std::string& question, std::uint32_t max_new,
                                   TokenId eos) {
        append_text("user\n");
        if (!attached_) {
            image_pos_ = history_.size();
            attached_ = true;
        }
        append_text(question + "\n");
        GenerationRequest req;
        req.prompt_tokens = history_;
        auto cue = tok_->encode("assistant\n");
        req.prompt_tokens.insert(req.prompt_tokens.end(), cue.begin(), cue.end());
        for (const auto& f : frames_) {
            MediaItem item;
            item.kind = MediaSourceKind::FilePath;
            item.decoded = f;
            item.position = image_pos_;
            req.media.push_back(std::move(item));
        }
        req.max_new_tokens = max_new;
        req.eos_token = eos;
        last_prompt_ = req.prompt_tokens;
        return req;
    }

    void record_answer(const RequestResult& res, TokenId eos) {
        history_ = last_prompt_;
        std::vector<TokenId> content;
        for (TokenId t : res.output) {
            if (t == eos) break;
            content.push_back(t);
        }
        append_text(tok_->decode(content) + "\n");
    }

private:
    void append_text(const std::string& text) {
        auto toks = tok_->encode(text);
        history_.insert(history_.end(), toks.begin(), toks.end());
    }

    const ToyTokenizer* tok_;
    std::vector<CanonicalImage> frames_;
    std::vector<TokenId> history_;
    std::vector<TokenId> last_prompt_;
    std::size_t image_pos_ = 0;
    bool attached_ = false;
};

std::vector<TokenId> random_tokens(std::size_t n, std::uint32_t vocab, std::mt19937_64& rng) {
    std::vector<TokenId> out(n);
    for (auto& t : out) t = static_cast<TokenId>(rng() % vocab);
    return out;
}

// Measured latencies for `turns` conversation turns about the given media.
std::vector<double> run_turns(EmbeddedRunner& runner, const std::vector<CanonicalImage>& frames,
                              int turns, std::uint32_t max_new) {
    const TokenId eos = runner.backend().config().vocab_size - 1;
    MediaConversation conv(runner.tokenizer(), frames);
    std::vector<double> latencies;
    for (int t = 1; t <= turns; ++t) {
        auto req = conv.turn_request("Describe what changed in step " + std::to_string(t) + ".",
                                     max_new, eos);
        RequestResult res = runner.run(std::move(req));
        latencies.push_back(latency_of(res));
        conv.record_answer(res, eos);
    }
    return latencies;
}

CacheToggles no_cache_toggles() {
    CacheToggles t;
    t.text_cache = false;
    t.media_cache = false;
    t.kv_reuse = false;
    t.embed_reuse = false;
    return t;
}

// ---- HTTP target helpers ----

json http_post_chat(httplib::Client& client, const json& body) {
    auto res = client.Post("/v1/chat/completions", body.dump(), "application/json");
    if (!res) throw TargetUnreachable("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ScenarioFailed("chat request returned HTTP " + std::to_string(res->status) + ": " +
                             res->body);
    return json::parse(res->body);
}

void check_target(const std::string& target) {
    httplib::Client client(target);
    client.set_connection_timeout(std::chrono::seconds(5));
    auto res = client.Get("/v1/models");
    if (!res || res->status != 200) throw TargetUnreachable("cannot reach " + target);
}

}  // namespace

std::vector<BenchRow> run_concurrency(const BenchOptions& opts) {
    const std::vector<int> levels = {1, 2, 4, 8, 16};
    const std::uint32_t gen_len = 1024;
    std::vector<BenchRow> rows;
    double base_tok_s = 0.0;

    if (!opts.target.empty()) {
        check_target(opts.target);
        for (int level : levels) {
            std::vector<double> samples, lat_samples;
            for (int it = 0; it < opts.warmup + opts.iters; ++it) {
                auto t0 = std::chrono::steady_clock::now();
                std::vector<std::thread> workers;
                std::atomic<std::uint64_t> tokens{0};
                for (int w = 0; w < level; ++w) {
                    workers.emplace_back([&, w, it] {
                        httplib::Client client(opts.target);
                        client.set_read_timeout(std::chrono::seconds(300));
                        json body{{"messages",
                                   json::array({json{{"role", "user"},
                                                     {"content", "bench-" + std::to_string(it) +
                                                                     "-" + std::to_string(w)}}})},
                                  {"max_tokens", 128}};
                        auto res = http_post_chat(client, body);
                        tokens += res["usage"]["completion_tokens"].get<std::uint64_t>();
                    });
                }
                for (auto& w : workers) w.join();
                double elapsed =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
                if (it >= opts.warmup) {
                    samples.push_back(static_cast<double>(tokens.load()) / elapsed * 1000.0);
                    lat_samples.push_back(elapsed);
                }
            }
            double tok_s = median(samples);
            double lat = median(lat_samples);
            if (level == 1) base_tok_s = tok_s;
            rows.push_back({"concurrency", "concurrency=" + std::to_string(level), lat, tok_s,
                            static_cast<double>(level) / lat * 1000.0, tok_s / base_tok_s});
        }
        return rows;
    }

    BackendConfig cfg = bench_backend(opts);
    for (int level : levels) {
        std::vector<double> tok_samples, lat_samples;
        for (int it = 0; it < opts.warmup + opts.iters; ++it) {
            EmbeddedRunner runner(cfg, no_cache_toggles(),
                                  SchedulerConfig{static_cast<std::size_t>(level), 0});
            std::mt19937_64 rng(opts.seed * 7919 + static_cast<std::uint64_t>(level));
            std::vector<std::uint64_t> ids;
            const double t0 = runner.backend().clock().now_ms();
            for (int r = 0; r < level; ++r) {
                GenerationRequest req;
                req.prompt_tokens = random_tokens(8, cfg.vocab_size, rng);
                req.max_new_tokens = gen_len;
                req.eos_token = cfg.vocab_size - 1;
                req.arrival_time_ms = -1.0;
                ids.push_back(runner.scheduler().submit(std::move(req)));
            }
            runner.scheduler().run_until_idle();
            const double elapsed = runner.backend().clock().now_ms() - t0;
            std::uint64_t tokens = 0;
            for (auto id : ids) tokens += runner.scheduler().result(id).output.size();
            if (it >= opts.warmup) {
                tok_samples.push_back(static_cast<double>(tokens) / elapsed * 1000.0);
                lat_samples.push_back(elapsed);
            }
        }
        const double tok_s = median(tok_samples);
        const double lat = median(lat_samples);
        if (level == 1) base_tok_s = tok_s;
        rows.push_back({"concurrency", "concurrency=" + std::to_string(level), lat, tok_s,
                        static_cast<double>(level) / lat * 1000.0, tok_s / base_tok_s});
    }
    return rows;
}

std::vector<BenchRow> run_text_prefix(const BenchOptions& opts) {
    if (!opts.target.empty()) throw ScenarioFailed("text-prefix runs on the embedded engine");
    BackendConfig cfg = bench_backend(opts);
    const std::size_t prefix_len = 512, suffix_len = 48;

    std::vector<double> cold_samples, hit_samples;
    for (int it = 0; it < opts.warmup + opts.iters; ++it) {
        EmbeddedRunner runner(cfg);
        std::mt19937_64 rng(opts.seed * 104729 + static_cast<std::uint64_t>(it));
        auto prefix = random_tokens(prefix_len, cfg.vocab_size, rng);
        auto make_request = [&] {
            GenerationRequest req;
            req.prompt_tokens = prefix;
            auto suffix = random_tokens(suffix_len, cfg.vocab_size, rng);
            req.prompt_tokens.insert(req.prompt_tokens.end(), suffix.begin(), suffix.end());
            req.max_new_tokens = 8;
            req.eos_token = cfg.vocab_size - 1;
            return req;
        };
        RequestResult cold = runner.run(make_request());
        RequestResult hit = runner.run(make_request());
        if (it >= opts.warmup) {
            cold_samples.push_back(ttft_of(cold));
            hit_samples.push_back(ttft_of(hit));
        }
    }
    const double cold = median(cold_samples), hit = median(hit_samples);
    return {
        {"text-prefix", "prefix=0,prompt=560", cold, 0.0, 0.0, 1.0},
        {"text-prefix", "prefix=512,prompt=560", hit, 0.0, 0.0, cold / hit},
    };
}

std::vector<BenchRow> run_multiturn_image(const BenchOptions& opts) {
    if (!opts.target.empty()) throw ScenarioFailed("multiturn-image runs on the embedded engine");
    BenchOptions o = opts;
    if (o.profile == "qwen3-0.6b-sim") o.profile = "qwen3-vl-8b-sim";
    BackendConfig cfg = bench_backend(o);
    const int turns = 3;
    const std::uint32_t max_new = 40;

    CacheToggles cache_on;
    cache_on.text_cache = false;
    EmbeddedRunner cached(cfg, cache_on);
    EmbeddedRunner baseline(cfg, no_cache_toggles());

    std::vector<std::vector<double>> cache_lat(turns), nocache_lat(turns);
    std::mt19937_64 rng(o.seed);
    for (int it = 0; it < o.warmup + o.iters; ++it) {
        auto image = random_raster(1024, 1024, rng);
        auto with_cache = run_turns(cached, {image}, turns, max_new);
        auto without = run_turns(baseline, {image}, turns, max_new);
        if (it >= o.warmup) {
            for (int t = 0; t < turns; ++t) {
                cache_lat[static_cast<std::size_t>(t)].push_back(with_cache[static_cast<std::size_t>(t)]);
                nocache_lat[static_cast<std::size_t>(t)].push_back(without[static_cast<std::size_t>(t)]);
            }
        }
    }
    std::vector<BenchRow> rows;
    for (int t = 0; t < turns; ++t) {
        const double lc = median(cache_lat[static_cast<std::size_t>(t)]);
        const double ln = median(nocache_lat[static_cast<std::size_t>(t)]);
        rows.push_back({"multiturn-image", "turn=" + std::to_string(t + 1), lc,
                        static_cast<double>(max_new) / lc * 1000.0, 1000.0 / lc, ln / lc});
    }
    return rows;
}

std::vector<BenchRow> run_cache_ablation(const BenchOptions& opts) {
    if (!opts.target.empty()) throw ScenarioFailed("cache-ablation runs on the embedded engine");
    BenchOptions o = opts;
    if (o.profile == "qwen3-0.6b-sim") o.profile = "qwen3-vl-8b-sim";
    BackendConfig cfg = bench_backend(o);
    const std::uint32_t max_new = 40;

    struct Config {
        const char* name;
        bool embed, kv;
    };
    const Config configs[] = {
        {"no-cache", false, false},
        {"kv-only", false, true},
        {"embed-only", true, false},
        {"both", true, true},
    };

    std::vector<std::vector<double>> turn2(4);
    std::mt19937_64 rng(o.seed * 31);
    std::vector<std::unique_ptr<EmbeddedRunner>> runners;
    for (const auto& c : configs) {
        CacheToggles t;
        t.text_cache = false;
        t.media_cache = c.embed || c.kv;
        t.embed_reuse = c.embed;
        t.kv_reuse = c.kv;
        runners.push_back(std::make_unique<EmbeddedRunner>(cfg, t));
    }
    for (int it = 0; it < o.warmup + o.iters; ++it) {
        auto image = random_raster(1024, 1024, rng);
        for (std::size_t c = 0; c < 4; ++c) {
            auto lat = run_turns(*runners[c], {image}, 2, max_new);
            if (it >= o.warmup) turn2[c].push_back(lat[1]);
        }
    }
    const double base = median(turn2[0]);
    std::vector<BenchRow> rows;
    for (std::size_t c = 0; c < 4; ++c) {
        const double lat = median(turn2[c]);
        rows.push_back({"cache-ablation", std::string("config=") + configs[c].name, lat,
                        static_cast<double>(max_new) / lat * 1000.0, 1000.0 / lat, base / lat});
    }
    return rows;
}

std::vector<BenchRow> run_video_frames(const BenchOptions& opts) {
    if (!opts.target.empty()) throw ScenarioFailed("video-frames runs on the embedded engine");
    BenchOptions o = opts;
    if (o.profile == "qwen3-0.6b-sim") o.profile = "qwen3-vl-8b-sim";
    BackendConfig cfg = bench_backend(o);
    const std::vector<int> frame_counts = {4, 8, 16, 32, 64};
    const std::uint32_t max_new = 25;

    std::vector<BenchRow> rows;
    for (int frames : frame_counts) {
        std::mt19937_64 rng(o.seed * 1013 + static_cast<std::uint64_t>(frames));
        std::vector<CanonicalImage> video;
        for (int f = 0; f < frames; ++f) video.push_back(random_raster(112, 112, rng));

        CacheToggles cache_on;
        cache_on.text_cache = false;
        EmbeddedRunner cached(cfg, cache_on);
        EmbeddedRunner baseline(cfg, no_cache_toggles());

        std::vector<double> cached_lat, cold_lat;
        const TokenId eos = cfg.vocab_size - 1;
        for (int it = 0; it < o.warmup + o.iters; ++it) {
            // Independent single-turn analyses of the same video: steady
            // state for the cached runner, always cold for the baseline.
            MediaConversation conv_c(cached.tokenizer(), video);
            MediaConversation conv_n(baseline.tokenizer(), video);
            RequestResult rc = cached.run(conv_c.turn_request("Summarize the clip.", max_new, eos));
            RequestResult rn = baseline.run(conv_n.turn_request("Summarize the clip.", max_new, eos));
            if (it >= o.warmup) {
                cached_lat.push_back(latency_of(rc));
                cold_lat.push_back(latency_of(rn));
            }
        }
        const double lc = median(cached_lat), ln = median(cold_lat);
        rows.push_back({"video-frames", "frames=" + std::to_string(frames), lc,
                        static_cast<double>(max_new) / lc * 1000.0, 1000.0 / lc, ln / lc});
    }
    return rows;
}

std::vector<BenchRow> run_resolution_sweep(const BenchOptions& opts) {
    if (!opts.target.empty()) throw ScenarioFailed("resolution-sweep runs on the embedded engine");
    BenchOptions o = opts;
    if (o.profile == "qwen3-0.6b-sim") o.profile = "qwen3-vl-8b-sim";
    BackendConfig cfg = bench_backend(o);
    const std::vector<std::uint32_t> resolutions = {224, 448, 768, 1024};
    const std::uint32_t max_new = 60;

    std::vector<BenchRow> rows;
    for (std::uint32_t res : resolutions) {
        CacheToggles cache_on;
        cache_on.text_cache = false;
        EmbeddedRunner cached(cfg, cache_on);
        std::mt19937_64 rng(o.seed * 271 + res);
        std::vector<double> cold_lat, steady_lat;
        for (int it = 0; it < o.warmup + o.iters; ++it) {
            auto image = random_raster(res, res, rng);
            auto lat = run_turns(cached, {image}, 3, max_new);
            if (it >= o.warmup) {
                cold_lat.push_back(lat[0]);
                steady_lat.push_back(lat[2]);
            }
        }
        const double lc = median(steady_lat), ln = median(cold_lat);
        rows.push_back({"resolution-sweep", "resolution=" + std::to_string(res), lc,
                        static_cast<double>(max_new) / lc * 1000.0, 1000.0 / lc, ln / lc});
    }
    return rows;
}

std::vector<BenchRow> run_scenario(const BenchOptions& opts) {
    if (opts.scenario == "concurrency") return run_concurrency(opts);
    if (opts.scenario == "text-prefix") return run_text_prefix(opts);
    if (opts.scenario == "multiturn-image") return run_multiturn_image(opts);
    if (opts.scenario == "video-frames") return run_video_frames(opts);
    if (opts.scenario == "resolution-sweep") return run_resolution_sweep(opts);
    if (opts.scenario == "cache-ablation") return run_cache_ablation(opts);
    throw std::invalid_argument("unknown scenario: " + opts.scenario);
}

std::string to_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "scenario,params,latency_ms,tokens_per_sec,requests_per_sec,speedup\n";
    for (const auto& r : rows) {
        os << r.scenario << ',' << r.params << ',' << fmt(r.latency_ms) << ','
           << fmt(r.tokens_per_sec) << ',' << fmt(r.requests_per_sec) << ',' << fmt(r.speedup)
           << '\n';
    }
    return os.str();
}

void emit_report(const std::vector<BenchRow>& rows, std::ostream& summary,
                 const std::string& csv_path) {
    if (rows.empty()) throw std::invalid_argument("no measured rows to report");
    summary << std::left << std::setw(18) << "scenario" << std::setw(26) << "params"
            << std::right << std::setw(14) << "latency_ms" << std::setw(14) << "tok/s"
            << std::setw(12) << "req/s" << std::setw(10) << "speedup" << '\n';
    for (const auto& r : rows) {
        summary << std::left << std::setw(18) << r.scenario << std::setw(26) << r.params
                << std::right << std::setw(14) << fmt(r.latency_ms) << std::setw(14)
                << fmt(r.tokens_per_sec) << std::setw(12) << fmt(r.requests_per_sec)
                << std::setw(10) << fmt(r.speedup) << '\n';
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + csv_path);
        out << to_csv(rows);
    }
}

void write_svg_plot(const std::vector<BenchRow>& rows, const std::string& path) {
    if (rows.empty()) throw std::invalid_argument("no rows to plot");
    const double w = 640, h = 360, margin = 48;
    double max_speedup = 1.0;
    for (const auto& r : rows) max_speedup = std::max(max_speedup, r.speedup);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<polyline fill=\"none\" "
           "stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double x =
            margin + (w - 2 * margin) * (rows.size() == 1
                                             ? 0.5
                                             : static_cast<double>(i) /
                                                   static_cast<double>(rows.size() - 1));
        const double y = h - margin - (h - 2 * margin) * (rows[i].speedup / max_speedup);
        out << fmt(x) << ',' << fmt(y) << ' ';
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double x =
            margin + (w - 2 * margin) * (rows.size() == 1
                                             ? 0.5
                                             : static_cast<double>(i) /
                                                   static_cast<double>(rows.size() - 1));
        out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(h - margin / 2)
            << "\" font-size=\"10\" text-anchor=\"middle\">" << rows[i].params << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace infersim::bench
