#include "infersim/bench.hpp"
#include "infersim/errors.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Benchmark scenarios for the serving engine"};

    infersim::bench::BenchOptions opts;
    bool plots = false;

    app.add_option("scenario", opts.scenario, "scenario to run")
        ->required()
        ->check(CLI::IsMember({"concurrency", "text-prefix", "multiturn-image", "video-frames",
                               "resolution-sweep", "cache-ablation"}));
    app.add_option("--target", opts.target, "benchmark a running server instead of the embedded engine");
    app.add_option("--profile", opts.profile, "builtin profile name or profile file path")
        ->capture_default_str();
    app.add_option("--out", opts.out_path, "CSV output path");
    app.add_flag("--plots", plots, "also write an SVG plot next to the CSV");
    app.add_option("--seed", opts.seed, "RNG seed")->capture_default_str();
    app.add_option("--iters", opts.iters, "measured iterations per point")->capture_default_str();
    app.add_option("--warmup", opts.warmup, "warmup iterations per point")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        auto rows = infersim::bench::run_scenario(opts);
        infersim::bench::emit_report(rows, std::cout, opts.out_path);
        if (plots) {
            std::string plot = opts.out_path.empty() ? opts.scenario + ".svg"
                                                     : opts.out_path + ".svg";
            infersim::bench::write_svg_plot(rows, plot);
            std::printf("plot written to %s\n", plot.c_str());
        }
    } catch (const infersim::TargetUnreachable& e) {
        std::fprintf(stderr, "target unreachable: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "benchmark failed: %s\n", e.what());
        return 1;
    }
    return 0;
}
