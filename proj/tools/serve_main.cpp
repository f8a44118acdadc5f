#include "infersim/server.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <string>
#include <thread>

namespace {
volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OpenAI-compatible serving frontend for the simulated backend"};

    infersim::EngineConfig engine;
    infersim::ServerOptions server;
    std::string profile = "qwen3-0.6b-sim";
    std::string time_mode = "sim";
    bool no_text_cache = false, no_media_cache = false;
    bool no_kv_reuse = false, no_embed_reuse = false;

    app.add_option("--host", server.host, "bind address")->capture_default_str();
    app.add_option("--port", server.port, "listen port (0 = ephemeral)")->capture_default_str();
    app.add_option("--cost-profile", profile, "builtin profile name or profile file path")
        ->capture_default_str();
    app.add_option("--time-mode", time_mode, "clock mode")
        ->check(CLI::IsMember({"sim", "wall"}))
        ->capture_default_str();
    app.add_option("--max-batch-size", engine.scheduler.max_batch_size,
                   "concurrent decode slots")
        ->capture_default_str();
    app.add_option("--text-cache-bytes", engine.text_cache.byte_budget,
                   "text prefix cache budget")
        ->capture_default_str();
    app.add_option("--prefix-block", engine.text_cache.block_granularity,
                   "prefix snapshot granularity in tokens")
        ->capture_default_str();
    app.add_option("--media-cache-bytes", engine.media_cache.byte_budget,
                   "media cache budget")
        ->capture_default_str();
    app.add_flag("--no-text-cache", no_text_cache, "disable the text prefix cache");
    app.add_flag("--no-media-cache", no_media_cache, "disable the media cache entirely");
    app.add_flag("--no-kv-reuse", no_kv_reuse, "disable multimodal KV reuse");
    app.add_flag("--no-embed-reuse", no_embed_reuse, "disable vision embedding reuse");
    app.add_flag("--allow-local-files", server.allow_local_files,
                 "permit image URLs that reference local paths");

    CLI11_PARSE(app, argc, argv);

    engine.toggles.text_cache = !no_text_cache;
    engine.toggles.media_cache = !no_media_cache;
    engine.toggles.kv_reuse = !no_kv_reuse;
    engine.toggles.embed_reuse = !no_embed_reuse;
    engine.time_mode = time_mode == "wall" ? infersim::TimeMode::WallClock
                                           : infersim::TimeMode::Simulated;

    try {
        engine.backend = (profile.find('/') != std::string::npos ||
                          profile.find(".conf") != std::string::npos)
                             ? infersim::load_profile_file(profile)
                             : infersim::backend_profile(profile);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "profile error: %s\n", e.what());
        return 1;
    }

    infersim::Engine eng(engine);
    infersim::ApiServer srv(eng, server);
    if (!srv.start()) {
        std::fprintf(stderr, "failed to bind %s:%d\n", server.host.c_str(), server.port);
        return 1;
    }
    std::printf("serving %s on %s:%d\n", engine.backend.model_id.c_str(), server.host.c_str(),
                srv.port());
    std::fflush(stdout);

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));

    srv.stop();
    eng.shutdown();
    return 0;
}
