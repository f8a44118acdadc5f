#pragma once

#include "infersim/engine.hpp"

#include <memory>
#include <string>
#include <thread>

namespace infersim {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8000;  // 0 binds an ephemeral port
    bool allow_local_files = false;
    double fetch_timeout_s = 10.0;
};

// OpenAI-compatible HTTP front end. Handlers run on httplib's connection
// threads; all generation state stays behind the engine.
class ApiServer {
public:
    ApiServer(Engine& engine, ServerOptions opts);
    ~ApiServer();

    // Binds and serves on a background thread; returns false on bind failure.
    bool start();
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace infersim
