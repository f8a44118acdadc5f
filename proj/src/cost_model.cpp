#include "infersim/cost_model.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace infersim {

void Clock::reset() {
    sim_now_ = 0.0;
    charged_ = 0.0;
    start_ = std::chrono::steady_clock::now();
}

double Clock::now_ms() const {
    if (mode_ == TimeMode::Simulated) return sim_now_;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
}

void Clock::charge(double ms) {
    charged_ += ms;
    if (mode_ == TimeMode::Simulated) {
        sim_now_ += ms;
    } else {
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
    }
}

BackendConfig backend_profile(const std::string& name) {
    BackendConfig cfg;
    cfg.model_id = name;
    if (name == "qwen3-0.6b-sim") {
        // Decode: single stream ~441 tok/s, 16-way aggregate ratio 3.7.
        // Prefill: 560-token prompt ~245 ms, 48-token suffix ~42 ms.
        cfg.cost.prefill_per_token_ms = 0.396;
        cfg.cost.fixed_overhead_ms = 23.2;
        cfg.cost.step_base_ms = 1.765;
        cfg.cost.step_per_seq_ms = 0.5025;
        cfg.cost.vision_per_patch_ms = 0.0;
        cfg.cost.first_hit_overhead_ms = 0.0;
    } else if (name == "qwen3-vl-8b-sim") {
        // 1024x1024 image (1369 patches): vision ~19.9 s, full multimodal
        // prefill ~2.3 s, 40-token decode ~0.52 s.
        cfg.cost.prefill_per_token_ms = 1.444;
        cfg.cost.fixed_overhead_ms = 0.0;
        cfg.cost.step_base_ms = 12.0;
        cfg.cost.step_per_seq_ms = 1.0;
        cfg.cost.vision_per_patch_ms = 14.5;
        cfg.cost.first_hit_overhead_ms = 300.0;
    } else {
        throw std::invalid_argument("unknown cost profile: " + name);
    }
    return cfg;
}

BackendConfig load_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file: " + path);

    // First pass for an optional base profile.
    BackendConfig cfg = backend_profile("qwen3-0.6b-sim");
    std::string line;
    std::vector<std::pair<std::string, std::string>> pairs;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string key, value;
        std::istringstream ls(line);
        if (!std::getline(ls, key, '=')) continue;
        std::getline(ls, value);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            auto last = s.find_last_not_of(" \t\r");
            s.erase(last == std::string::npos ? 0 : last + 1);
        };
        trim(key);
        trim(value);
        if (key.empty()) continue;
        pairs.emplace_back(key, value);
    }
    for (const auto& [key, value] : pairs)
        if (key == "base") cfg = backend_profile(value);

    for (const auto& [key, value] : pairs) {
        if (key == "base") continue;
        if (key == "model_id") cfg.model_id = value;
        else if (key == "vocab_size") cfg.vocab_size = static_cast<std::uint32_t>(std::stoul(value));
        else if (key == "eos_period") cfg.eos_period = static_cast<std::uint32_t>(std::stoul(value));
        else if (key == "max_context") cfg.max_context = std::stoull(value);
        else if (key == "patch_size") cfg.patch_size = static_cast<std::uint32_t>(std::stoul(value));
        else if (key == "kv_bytes_per_token") cfg.kv_bytes_per_token = std::stoull(value);
        else if (key == "embed_bytes_per_patch") cfg.embed_bytes_per_patch = std::stoull(value);
        else if (key == "prefill_per_token_ms") cfg.cost.prefill_per_token_ms = std::stod(value);
        else if (key == "step_base_ms") cfg.cost.step_base_ms = std::stod(value);
        else if (key == "step_per_seq_ms") cfg.cost.step_per_seq_ms = std::stod(value);
        else if (key == "vision_per_patch_ms") cfg.cost.vision_per_patch_ms = std::stod(value);
        else if (key == "fixed_overhead_ms") cfg.cost.fixed_overhead_ms = std::stod(value);
        else if (key == "first_hit_overhead_ms") cfg.cost.first_hit_overhead_ms = std::stod(value);
        else throw std::runtime_error("unknown profile key: " + key);
    }
    return cfg;
}

}  // namespace infersim
