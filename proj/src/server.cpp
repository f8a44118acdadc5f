#include "infersim/server.hpp"

#include "infersim/chat.hpp"
#include "infersim/errors.hpp"
#include "infersim/streaming.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <mutex>

namespace infersim {

using json = nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_completion_counter{0};

struct HttpError {
    int status;
    std::string message;
};

// Per-request event channel between the scheduler thread and the SSE
// content provider.
struct EventChannel {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<SlotEvent> events;

    void push(const SlotEvent& ev) {
        {
            std::lock_guard lock(mu);
            events.push_back(ev);
        }
        cv.notify_one();
    }

    SlotEvent pop() {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return !events.empty(); });
        SlotEvent ev = events.front();
        events.pop_front();
        return ev;
    }
};

struct ParsedChat {
    std::vector<ChatMessage> messages;
    std::uint32_t max_tokens = 128;
    bool stream = false;
};

ParsedChat parse_chat_request(const json& body, const std::string& served_model) {
    if (!body.is_object()) throw HttpError{400, "body must be a JSON object"};
    if (body.contains("model")) {
        if (!body["model"].is_string()) throw HttpError{400, "model must be a string"};
        if (body["model"].get<std::string>() != served_model)
            throw HttpError{404, "model not found: " + body["model"].get<std::string>()};
    }
    if (!body.contains("messages") || !body["messages"].is_array() || body["messages"].empty())
        throw HttpError{400, "messages must be a non-empty array"};

    ParsedChat out;
    for (const auto& m : body["messages"]) {
        if (!m.is_object() || !m.contains("role") || !m["role"].is_string())
            throw HttpError{400, "each message needs a string role"};
        ChatMessage msg;
        msg.role = m["role"].get<std::string>();
        if (msg.role != "system" && msg.role != "user" && msg.role != "assistant")
            throw HttpError{400, "unknown role: " + msg.role};
        if (!m.contains("content")) throw HttpError{400, "message missing content"};
        const auto& content = m["content"];
        if (content.is_string()) {
            msg.parts.push_back({ChatPart::Kind::Text, content.get<std::string>()});
        } else if (content.is_array()) {
            for (const auto& part : content) {
                if (!part.is_object() || !part.contains("type"))
                    throw HttpError{400, "malformed content part"};
                const std::string type = part["type"].get<std::string>();
                if (type == "text") {
                    if (!part.contains("text") || !part["text"].is_string())
                        throw HttpError{400, "text part missing text"};
                    msg.parts.push_back({ChatPart::Kind::Text, part["text"].get<std::string>()});
                } else if (type == "image_url") {
                    std::string url;
                    if (part.contains("image_url")) {
                        if (part["image_url"].is_string()) url = part["image_url"].get<std::string>();
                        else if (part["image_url"].is_object() && part["image_url"].contains("url"))
                            url = part["image_url"]["url"].get<std::string>();
                    }
                    if (url.empty()) throw HttpError{400, "image_url part missing url"};
                    msg.parts.push_back({ChatPart::Kind::ImageUrl, url});
                } else {
                    throw HttpError{400, "unsupported content part type: " + type};
                }
            }
        } else {
            throw HttpError{400, "content must be a string or array of parts"};
        }
        out.messages.push_back(std::move(msg));
    }
    if (body.contains("max_tokens")) {
        if (!body["max_tokens"].is_number_integer() || body["max_tokens"].get<std::int64_t>() < 1)
            throw HttpError{400, "max_tokens must be a positive integer"};
        out.max_tokens = body["max_tokens"].get<std::uint32_t>();
    }
    if (body.contains("stream")) {
        if (!body["stream"].is_boolean()) throw HttpError{400, "stream must be a boolean"};
        out.stream = body["stream"].get<bool>();
    }
    return out;
}

json error_json(const std::string& message) {
    return json{{"error", {{"message", message}, {"type", "invalid_request_error"}}}};
}

std::string sse_event(const json& payload) { return "data: " + payload.dump() + "\n\n"; }

}  // namespace

struct ApiServer::Impl {
    Engine* engine;
    ServerOptions opts;
    httplib::Server svr;
    std::thread thread;

    Impl(Engine& eng, ServerOptions o) : engine(&eng), opts(std::move(o)) { register_routes(); }

    std::string model_id() const { return engine->config().backend.model_id; }

    void register_routes() {
        svr.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
            json out{{"object", "list"},
                     {"data", json::array({json{{"id", model_id()},
                                                {"object", "model"},
                                                {"created", static_cast<std::int64_t>(std::time(nullptr))},
                                                {"owned_by", "infersim"}}})}};
            res.set_content(out.dump(), "application/json");
        });

        svr.Get("/admin/cache/stats", [this](const httplib::Request&, httplib::Response& res) {
            auto stats = engine->cache_stats();
            auto to_json = [](const CacheStats& s) {
                return json{{"hits", s.hits},
                            {"misses", s.misses},
                            {"evictions", s.evictions},
                            {"bytes_resident", s.bytes_resident}};
            };
            json out{{"text_cache", to_json(stats.text)}, {"media_cache", to_json(stats.media)}};
            res.set_content(out.dump(), "application/json");
        });

        svr.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
            handle_chat(req, res);
        });
    }

    void handle_chat(const httplib::Request& req, httplib::Response& res) {
        json body;
        ParsedChat parsed;
        BuiltPrompt prompt;
        try {
            body = json::parse(req.body, nullptr, true);
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(error_json(std::string("invalid JSON: ") + e.what()).dump(),
                            "application/json");
            return;
        }
        try {
            parsed = parse_chat_request(body, model_id());
            FetchOptions fetch;
            fetch.timeout_s = opts.fetch_timeout_s;
            fetch.allow_local_files = opts.allow_local_files;
            try {
                prompt = build_prompt(parsed.messages, engine->tokenizer(), fetch);
            } catch (const std::exception& e) {
                throw HttpError{422, std::string("image decode failed: ") + e.what()};
            }
        } catch (const HttpError& e) {
            res.status = e.status;
            res.set_content(error_json(e.message).dump(), "application/json");
            return;
        }

        GenerationRequest gen;
        gen.prompt_tokens = std::move(prompt.tokens);
        gen.media = std::move(prompt.media);
        gen.max_new_tokens = parsed.max_tokens;
        gen.eos_token = engine->config().backend.vocab_size - 1;
        gen.stream = parsed.stream;

        const std::size_t prompt_tokens = gen.prompt_tokens.size();
        const std::string completion_id =
            "chatcmpl-" + std::to_string(++g_completion_counter);
        const auto created = static_cast<std::int64_t>(std::time(nullptr));

        if (!parsed.stream) {
            std::uint64_t id;
            try {
                id = engine->submit(std::move(gen));
            } catch (const ShuttingDown&) {
                res.status = 503;
                res.set_content(error_json("server is shutting down").dump(), "application/json");
                return;
            }
            RequestResult result = engine->wait(id);
            if (result.finish == FinishReason::Error) {
                res.status = 500;
                res.set_content(error_json(result.error).dump(), "application/json");
                return;
            }
            const TokenId eos = engine->config().backend.vocab_size - 1;
            StreamDecoder decoder(engine->tokenizer());
            std::string content;
            std::size_t completion_tokens = 0;
            for (TokenId t : result.output) {
                if (t == eos) break;
                content += decoder.push_token(t);
                ++completion_tokens;
            }
            content += decoder.finish();
            json out{{"id", completion_id},
                     {"object", "chat.completion"},
                     {"created", created},
                     {"model", model_id()},
                     {"choices",
                      json::array(
                          {json{{"index", 0},
                                {"message", {{"role", "assistant"}, {"content", content}}},
                                {"finish_reason",
                                 result.finish == FinishReason::Stop ? "stop" : "length"}}})},
                     {"usage",
                      {{"prompt_tokens", prompt_tokens},
                       {"completion_tokens", completion_tokens},
                       {"total_tokens", prompt_tokens + completion_tokens}}}};
            res.set_content(out.dump(), "application/json");
            return;
        }

        // Streaming: sink feeds a channel drained by the content provider.
        auto channel = std::make_shared<EventChannel>();
        try {
            engine->submit(std::move(gen),
                           [channel](const SlotEvent& ev) { channel->push(ev); });
        } catch (const ShuttingDown&) {
            res.status = 503;
            res.set_content(error_json("server is shutting down").dump(), "application/json");
            return;
        }

        const TokenId eos = engine->config().backend.vocab_size - 1;
        auto decoder = std::make_shared<StreamDecoder>(engine->tokenizer());
        auto first = std::make_shared<bool>(true);
        const std::string model = model_id();

        auto chunk_json = [completion_id, created, model](const json& delta,
                                                          const json& finish) {
            return json{{"id", completion_id},
                        {"object", "chat.completion.chunk"},
                        {"created", created},
                        {"model", model},
                        {"choices", json::array({json{
                                        {"index", 0}, {"delta", delta}, {"finish_reason", finish}}})}};
        };

        res.set_chunked_content_provider(
            "text/event-stream",
            [channel, decoder, first, chunk_json, eos](std::size_t, httplib::DataSink& sink) {
                for (;;) {
                    SlotEvent ev = channel->pop();
                    if (!ev.done) {
                        if (!ev.token || *ev.token == eos) continue;
                        std::string text = decoder->push_token(*ev.token);
                        json delta;
                        if (*first) {
                            delta["role"] = "assistant";
                            *first = false;
                        }
                        if (text.empty() && delta.is_null()) continue;
                        if (!text.empty()) delta["content"] = text;
                        std::string payload = sse_event(chunk_json(delta, nullptr));
                        if (!sink.write(payload.data(), payload.size())) return false;
                        continue;
                    }
                    std::string tail = decoder->finish();
                    if (!tail.empty()) {
                        std::string payload =
                            sse_event(chunk_json(json{{"content", tail}}, nullptr));
                        if (!sink.write(payload.data(), payload.size())) return false;
                    }
                    const char* finish =
                        ev.finish == FinishReason::Stop ? "stop" : "length";
                    std::string payload = sse_event(chunk_json(json::object(), finish));
                    if (!sink.write(payload.data(), payload.size())) return false;
                    static const std::string done = "data: [DONE]\n\n";
                    if (!sink.write(done.data(), done.size())) return false;
                    sink.done();
                    return false;
                }
            });
    }
};

ApiServer::ApiServer(Engine& engine, ServerOptions opts)
    : impl_(std::make_unique<Impl>(engine, std::move(opts))) {}

ApiServer::~ApiServer() { stop(); }

bool ApiServer::start() {
    auto& svr = impl_->svr;
    const auto& opts = impl_->opts;
    if (opts.port == 0) {
        port_ = svr.bind_to_any_port(opts.host);
        if (port_ <= 0) return false;
    } else {
        if (!svr.bind_to_port(opts.host, opts.port)) return false;
        port_ = opts.port;
    }
    impl_->thread = std::thread([this] { impl_->svr.listen_after_bind(); });
    svr.wait_until_ready();
    return true;
}

void ApiServer::stop() {
    if (!impl_) return;
    impl_->svr.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace infersim
