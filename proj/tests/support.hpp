#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace testing {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    out << contents;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("curator_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct MockReply {
    int status = 200;
    nlohmann::json body;
};

/// OpenAI-compatible server on an ephemeral localhost port. Handlers receive
/// the parsed request body; every request is recorded.
class MockOpenAI {
public:
    using Handler = std::function<MockReply(const nlohmann::json&)>;

    MockOpenAI(Handler chat, Handler embeddings = {}) : chat_(std::move(chat)), embeddings_(std::move(embeddings)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            serve(chat_, req, res);
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            serve(embeddings_, req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockOpenAI() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::size_t hits() const { return hits_.load(); }
    std::vector<nlohmann::json> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

    /// A chat completion carrying `content` and optional token logprobs.
    static nlohmann::json completion(const std::string& content, const std::string& finish_reason = "stop",
                                     nlohmann::json logprobs = nullptr, int completion_tokens = -1) {
        nlohmann::json choice{{"index", 0},
                              {"message", {{"role", "assistant"}, {"content", content}}},
                              {"finish_reason", finish_reason}};
        if (!logprobs.is_null()) choice["logprobs"] = {{"content", std::move(logprobs)}};
        nlohmann::json body{{"id", "cmpl-test"}, {"object", "chat.completion"}, {"choices", {choice}}};
        if (completion_tokens >= 0) body["usage"] = {{"completion_tokens", completion_tokens}};
        return body;
    }

private:
    void serve(const Handler& handler, const httplib::Request& req, httplib::Response& res) {
        ++hits_;
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        {
            std::lock_guard lock(mutex_);
            requests_.push_back(body);
        }
        if (!handler) {
            res.status = 404;
            return;
        }
        auto reply = handler(body);
        res.status = reply.status;
        res.set_content(reply.body.is_null() ? std::string("{}") : reply.body.dump(), "application/json");
    }

    Handler chat_;
    Handler embeddings_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<std::size_t> hits_{0};
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> requests_;
};

}  // namespace testing
