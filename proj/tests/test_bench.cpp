#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "infersim/bench.hpp"

#include <fstream>
#include <sstream>

using namespace infersim;
using namespace infersim::bench;

TEST_CASE("median is the order statistic, not the mean") {
    CHECK(median({5.0}) == 5.0);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    // heavily skewed sample: mean would be 202.75, median is not
    CHECK(median({1.0, 2.0, 3.0, 805.0}) == 2.5);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("random_raster is seed-deterministic") {
    std::mt19937_64 a(9), b(9), c(10);
    auto ra = random_raster(16, 8, a);
    auto rb = random_raster(16, 8, b);
    auto rc = random_raster(16, 8, c);
    CHECK(ra.valid());
    CHECK(ra.pixels == rb.pixels);
    CHECK(ra.pixels != rc.pixels);
}

TEST_CASE("csv output has the fixed header and row order") {
    std::vector<BenchRow> rows{{"s1", "k=1", 1.5, 2.25, 0.5, 1.0},
                               {"s1", "k=2", 3.0, 4.5, 1.0, 2.0}};
    const std::string csv = to_csv(rows);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "scenario,params,latency_ms,tokens_per_sec,requests_per_sec,speedup");
    std::getline(in, line);
    CHECK(line == "s1,k=1,1.500,2.250,0.500,1.000");
    std::getline(in, line);
    CHECK(line == "s1,k=2,3.000,4.500,1.000,2.000");
    CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("emit_report refuses an empty row set and writes no file") {
    std::ostringstream sink;
    CHECK_THROWS_AS(emit_report({}, sink, "should_not_exist.csv"), std::invalid_argument);
    CHECK_FALSE(std::ifstream("should_not_exist.csv").good());
}

TEST_CASE("scenario reruns with the same seed are byte-identical") {
    BenchOptions opts;
    opts.scenario = "text-prefix";
    opts.seed = 17;
    opts.warmup = 1;
    opts.iters = 3;
    const std::string a = to_csv(run_scenario(opts));
    const std::string b = to_csv(run_scenario(opts));
    CHECK(a == b);
    CHECK(a.find("text-prefix,prefix=512") != std::string::npos);
}

TEST_CASE("unknown scenario throws") {
    BenchOptions opts;
    opts.scenario = "nope";
    CHECK_THROWS_AS(run_scenario(opts), std::invalid_argument);
}

TEST_CASE("svg plot is written and well-formed enough") {
    std::vector<BenchRow> rows{{"s", "a", 0, 0, 0, 1.0}, {"s", "b", 0, 0, 0, 4.0}};
    const std::string path = "bench_test_plot.svg";
    write_svg_plot(rows, path);
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string svg = buf.str();
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    std::remove(path.c_str());
}
