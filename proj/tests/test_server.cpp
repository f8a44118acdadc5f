#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "infersim/image.hpp"
#include "infersim/server.hpp"
#include "infersim/streaming.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace infersim;
using json = nlohmann::json;

namespace {

struct TestServer {
    Engine engine;
    ApiServer server;

    explicit TestServer(EngineConfig cfg = make_config())
        : engine(cfg), server(engine, ServerOptions{"127.0.0.1", 0, false, 5.0}) {
        REQUIRE(server.start());
    }
    ~TestServer() {
        server.stop();
        engine.shutdown();
    }

    static EngineConfig make_config() {
        EngineConfig cfg;
        cfg.backend = backend_profile("qwen3-0.6b-sim");
        return cfg;
    }

    httplib::Client client() {
        httplib::Client c("127.0.0.1", server.port());
        c.set_read_timeout(std::chrono::seconds(60));
        return c;
    }
};

json chat_body(const std::string& content, int max_tokens = 8, bool stream = false) {
    json body{{"messages", json::array({json{{"role", "user"}, {"content", content}}})},
              {"max_tokens", max_tokens}};
    if (stream) body["stream"] = true;
    return body;
}

// Splits an SSE stream on the double-newline frame boundary.
std::vector<std::string> sse_frames(const std::string& body) {
    std::vector<std::string> frames;
    std::size_t pos = 0;
    while (pos < body.size()) {
        auto end = body.find("\n\n", pos);
        REQUIRE(end != std::string::npos);  // every frame must be terminated
        frames.push_back(body.substr(pos, end - pos));
        pos = end + 2;
    }
    return frames;
}

}  // namespace

TEST_CASE("/v1/models lists the served model") {
    TestServer ts;
    auto res = ts.client().Get("/v1/models");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    json out = json::parse(res->body);
    CHECK(out["object"] == "list");
    REQUIRE(out["data"].size() == 1);
    CHECK(out["data"][0]["id"] == "qwen3-0.6b-sim");
    CHECK(out["data"][0]["object"] == "model");
    CHECK(out["data"][0]["owned_by"] == "infersim");
    CHECK(out["data"][0].contains("created"));
}

TEST_CASE("non-stream completion schema") {
    TestServer ts;
    auto res = ts.client().Post("/v1/chat/completions", chat_body("hello world").dump(),
                                "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    json out = json::parse(res->body);

    CHECK(out["object"] == "chat.completion");
    CHECK(out["model"] == "qwen3-0.6b-sim");
    CHECK(out["id"].get<std::string>().starts_with("chatcmpl-"));
    REQUIRE(out["choices"].size() == 1);
    const auto& choice = out["choices"][0];
    CHECK(choice["index"] == 0);
    CHECK(choice["message"]["role"] == "assistant");
    CHECK(choice["message"]["content"].is_string());
    const std::string finish = choice["finish_reason"].get<std::string>();
    CHECK((finish == "stop" || finish == "length"));

    const auto& usage = out["usage"];
    // prompt = "user\n" + content + "\n" + "assistant\n" under the byte tokenizer
    CHECK(usage["prompt_tokens"].get<int>() == 5 + 11 + 1 + 10);
    CHECK(usage["completion_tokens"].get<int>() <= 8);
    CHECK(usage["total_tokens"] ==
          usage["prompt_tokens"].get<int>() + usage["completion_tokens"].get<int>());
}

TEST_CASE("deterministic outputs for identical requests") {
    TestServer ts;
    auto body = chat_body("same prompt", 12).dump();
    auto r1 = ts.client().Post("/v1/chat/completions", body, "application/json");
    auto r2 = ts.client().Post("/v1/chat/completions", body, "application/json");
    REQUIRE(r1);
    REQUIRE(r2);
    CHECK(json::parse(r1->body)["choices"][0]["message"]["content"] ==
          json::parse(r2->body)["choices"][0]["message"]["content"]);
}

TEST_CASE("streaming sse framing and stream/non-stream equivalence") {
    TestServer ts;
    auto streamed = ts.client().Post("/v1/chat/completions", chat_body("stream me", 16, true).dump(),
                                     "application/json");
    REQUIRE(streamed);
    REQUIRE(streamed->status == 200);
    CHECK(streamed->get_header_value("Content-Type") == "text/event-stream");

    auto frames = sse_frames(streamed->body);
    REQUIRE(frames.size() >= 2);
    CHECK(frames.back() == "data: [DONE]");

    std::string content;
    bool saw_role = false, saw_finish = false;
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        REQUIRE(frames[i].starts_with("data: "));
        json chunk = json::parse(frames[i].substr(6));
        CHECK(chunk["object"] == "chat.completion.chunk");
        REQUIRE(chunk["choices"].size() == 1);
        const auto& choice = chunk["choices"][0];
        if (choice["delta"].contains("role")) {
            CHECK(choice["delta"]["role"] == "assistant");
            CHECK(i == 0);  // role rides the first chunk
            saw_role = true;
        }
        if (choice["delta"].contains("content"))
            content += choice["delta"]["content"].get<std::string>();
        if (!choice["finish_reason"].is_null()) {
            CHECK(i + 2 == frames.size());  // final chunk right before [DONE]
            const std::string f = choice["finish_reason"].get<std::string>();
            CHECK((f == "stop" || f == "length"));
            CHECK(choice["delta"].empty());
            saw_finish = true;
        }
    }
    CHECK(saw_role);
    CHECK(saw_finish);

    auto plain = ts.client().Post("/v1/chat/completions", chat_body("stream me", 16).dump(),
                                  "application/json");
    REQUIRE(plain);
    CHECK(json::parse(plain->body)["choices"][0]["message"]["content"] == content);
}

TEST_CASE("error statuses") {
    TestServer ts;
    auto c = ts.client();

    auto bad_json = c.Post("/v1/chat/completions", "{nope", "application/json");
    REQUIRE(bad_json);
    CHECK(bad_json->status == 400);
    CHECK(json::parse(bad_json->body)["error"]["type"] == "invalid_request_error");

    auto no_messages = c.Post("/v1/chat/completions", R"({"messages":[]})", "application/json");
    REQUIRE(no_messages);
    CHECK(no_messages->status == 400);

    auto bad_role = c.Post("/v1/chat/completions",
                           R"({"messages":[{"role":"robot","content":"x"}]})", "application/json");
    REQUIRE(bad_role);
    CHECK(bad_role->status == 400);

    auto wrong_model = c.Post(
        "/v1/chat/completions",
        R"({"model":"gpt-4","messages":[{"role":"user","content":"x"}]})", "application/json");
    REQUIRE(wrong_model);
    CHECK(wrong_model->status == 404);

    json bad_image{{"messages",
                    json::array({json{{"role", "user"},
                                      {"content", json::array({json{
                                           {"type", "image_url"},
                                           {"image_url", {{"url", "data:image/png;base64,!!!"}}}}})}}})}};
    auto undecodable = c.Post("/v1/chat/completions", bad_image.dump(), "application/json");
    REQUIRE(undecodable);
    CHECK(undecodable->status == 422);

    // local paths are rejected unless the server opts in
    json local_file{{"messages",
                     json::array({json{{"role", "user"},
                                       {"content", json::array({json{
                                            {"type", "image_url"},
                                            {"image_url", {{"url", "/etc/hostname"}}}}})}}})}};
    auto refused = c.Post("/v1/chat/completions", local_file.dump(), "application/json");
    REQUIRE(refused);
    CHECK(refused->status == 422);
}

TEST_CASE("image via base64 data uri reaches the media cache") {
    EngineConfig cfg;
    cfg.backend = backend_profile("qwen3-vl-8b-sim");
    cfg.backend.eos_period = 0;
    TestServer ts(cfg);

    CanonicalImage img;
    img.width = 8;
    img.height = 8;
    img.pixels.assign(192, 77);
    const std::string uri = "data:image/png;base64," + base64_encode(encode_png(img));

    json body{{"messages",
               json::array({json{
                   {"role", "user"},
                   {"content", json::array({json{{"type", "image_url"},
                                                 {"image_url", {{"url", uri}}}},
                                            json{{"type", "text"}, {"text", "what is this"}}})}}})},
              {"max_tokens", 4}};
    auto res = ts.client().Post("/v1/chat/completions", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);

    auto stats = ts.client().Get("/admin/cache/stats");
    REQUIRE(stats);
    json s = json::parse(stats->body);
    CHECK(s["media_cache"]["bytes_resident"].get<std::uint64_t>() > 0);
    CHECK(s.contains("text_cache"));
}

TEST_CASE("16 concurrent clients all complete with correct outputs") {
    TestServer ts;
    // deterministic single-request baselines first
    std::vector<std::string> prompts, expected;
    for (int i = 0; i < 16; ++i) prompts.push_back("client " + std::to_string(i) + " asks");
    for (const auto& p : prompts) {
        auto res = ts.client().Post("/v1/chat/completions", chat_body(p, 24).dump(),
                                    "application/json");
        REQUIRE(res);
        expected.push_back(
            json::parse(res->body)["choices"][0]["message"]["content"].get<std::string>());
    }

    std::vector<std::thread> workers;
    std::vector<std::string> got(16);
    for (int i = 0; i < 16; ++i) {
        workers.emplace_back([&, i] {
            auto res = ts.client().Post("/v1/chat/completions", chat_body(prompts[static_cast<std::size_t>(i)], 24).dump(),
                                        "application/json");
            if (res && res->status == 200)
                got[static_cast<std::size_t>(i)] =
                    json::parse(res->body)["choices"][0]["message"]["content"].get<std::string>();
        });
    }
    for (auto& w : workers) w.join();
    for (int i = 0; i < 16; ++i)
        CHECK(got[static_cast<std::size_t>(i)] == expected[static_cast<std::size_t>(i)]);
}
