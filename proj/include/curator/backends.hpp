#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "curator/types.hpp"

namespace curator {

// ---------------------------------------------------------------------------
// Errors

enum class BackendErrorKind { Transport, HttpStatus, MissingLogprobs, BadResponse, UnknownStep };

std::string_view to_string(BackendErrorKind kind);

class BackendError : public Error {
public:
    BackendError(BackendErrorKind kind, const std::string& message, bool retryable, int status = 0)
        : Error(message), kind_(kind), retryable_(retryable), status_(status) {}

    BackendErrorKind kind() const noexcept { return kind_; }
    bool retryable() const noexcept { return retryable_; }
    int status() const noexcept { return status_; }

private:
    BackendErrorKind kind_;
    bool retryable_;
    int status_;
};

// ---------------------------------------------------------------------------
// Log-probability scoring

/// Arguments of ln P(label | claim, steps). Steps keep their rationale order.
struct ScoringRequest {
    std::string claim_text;
    std::vector<std::string> step_texts;
    Label label = Label::Real;
};

class LogProbOracle {
public:
    virtual ~LogProbOracle() = default;
    /// ln P(label | claim, steps) <= 0. Implementations must be thread-safe.
    virtual double score(const ScoringRequest& request) = 0;
};

/// ln(sigmoid(z)) without overflow for large |z|.
double log_sigmoid(double z);

/// ln(1 + e^x) without overflow for large |x|.
double softplus(double x);

/// Test oracle: ln P(real) = ln sigmoid(bias + sum of step weights) and
/// ln P(fake) = ln(1 - sigmoid(.)). Steps are looked up by exact text.
class SyntheticLogisticOracle final : public LogProbOracle {
public:
    SyntheticLogisticOracle(std::map<std::string, double> step_weights, double bias = 0.0);
    SyntheticLogisticOracle(SyntheticLogisticOracle&& other) noexcept
        : weights_(std::move(other.weights_)), bias_(other.bias_), calls_(other.calls_.load()) {}

    /// Reads {"bias": b, "weights": {"step text": w, ...}}.
    static SyntheticLogisticOracle from_json(const nlohmann::json& doc);

    double score(const ScoringRequest& request) override;

    /// Logit for a subset; throws BackendError(UnknownStep) on a missing key.
    double logit(const std::vector<std::string>& step_texts) const;

    std::size_t calls() const noexcept { return calls_.load(); }
    double bias() const noexcept { return bias_; }
    const std::map<std::string, double>& weights() const noexcept { return weights_; }

private:
    std::map<std::string, double> weights_;
    double bias_;
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Embeddings

using Embedding = std::vector<double>;

class EmbeddingOracle {
public:
    virtual ~EmbeddingOracle() = default;
    /// One unit-norm vector of fixed dimension per text.
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

/// Hashed bag of words: lowercase alphanumeric tokens are hashed (FNV-1a)
/// into `dim` buckets, counted, then L2-normalized. A text with no tokens maps
/// to the first basis vector.
class HashingEmbedder final : public EmbeddingOracle {
public:
    explicit HashingEmbedder(std::size_t dim = 64) : dim_(dim) {}

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    Embedding embed_one(std::string_view text) const;
    std::size_t dim() const noexcept { return dim_; }

private:
    std::size_t dim_;
};

/// Scales `v` to unit length; the zero vector becomes the first basis vector.
void normalize_or_basis(Embedding& v);

// ---------------------------------------------------------------------------
// Remote (OpenAI-compatible) transport

struct RemoteConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string api_key_env = "OPENAI_API_KEY";
    int retry_budget = 2;  // retries after the first attempt
    std::size_t max_in_flight = 4;
    int timeout_seconds = 120;
    int backoff_ms = 200;
};

/// JSON-over-HTTP client with retry on transport errors, 429 and 5xx.
class RemoteClient {
public:
    explicit RemoteClient(RemoteConfig config);

    /// POSTs `body` to base path + `path` and returns the parsed response.
    nlohmann::json post_json(const std::string& path, const nlohmann::json& body) const;

    const RemoteConfig& config() const noexcept { return config_; }
    /// Number of HTTP attempts made, including retries.
    std::size_t attempts() const noexcept { return attempts_.load(); }

private:
    nlohmann::json post_once(const std::string& path, const std::string& payload) const;

    RemoteConfig config_;
    std::string host_;    // scheme://host[:port]
    std::string prefix_;  // path part of base_url without trailing slash
    std::string api_key_;
    mutable std::atomic<std::size_t> attempts_{0};
};

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.6;
    std::int64_t max_tokens = 32768;
    std::optional<int> top_logprobs;  // set to request token logprobs
};

struct ChatResult {
    std::string content;
    std::string finish_reason;
    std::optional<std::int64_t> completion_tokens;
    nlohmann::json raw;
};

nlohmann::json to_request_body(const ChatRequest& request);

class ChatCompleter {
public:
    virtual ~ChatCompleter() = default;
    virtual ChatResult complete(const ChatRequest& request) = 0;
};

class RemoteChatClient final : public ChatCompleter {
public:
    explicit RemoteChatClient(std::shared_ptr<const RemoteClient> client) : client_(std::move(client)) {}
    ChatResult complete(const ChatRequest& request) override;

private:
    std::shared_ptr<const RemoteClient> client_;
};

/// Verdict-elicitation messages used for log-probability scoring.
std::vector<ChatMessage> verdict_messages(const ScoringRequest& request);

/// Label log-probability from a chat completion carrying token logprobs:
/// generated tokens spelling the label are summed; otherwise the first
/// position's top alternatives are searched; a label missing from them gets the
/// smallest listed logprob as an upper bound.
double label_logprob_from_response(const nlohmann::json& response, Label label);

/// Scores through a chat completion with greedy decoding and token logprobs.
/// Results are cached by a content hash of (model, claim, steps, label).
class RemoteLogProbOracle final : public LogProbOracle {
public:
    RemoteLogProbOracle(std::shared_ptr<const RemoteClient> client, std::string model, int top_logprobs = 20);

    double score(const ScoringRequest& request) override;

    std::size_t cache_size() const;
    static std::string cache_key(std::string_view model, const ScoringRequest& request);

private:
    std::shared_ptr<const RemoteClient> client_;
    std::string model_;
    int top_logprobs_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, double> cache_;
};

class RemoteEmbedder final : public EmbeddingOracle {
public:
    RemoteEmbedder(std::shared_ptr<const RemoteClient> client, std::string model)
        : client_(std::move(client)), model_(std::move(model)) {}

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

private:
    std::shared_ptr<const RemoteClient> client_;
    std::string model_;
};

// ---------------------------------------------------------------------------
// Generation

struct GenerationConfig {
    std::string model;
    double temperature = 0.6;
    std::int64_t max_tokens = 32768;
    std::string prompt_template = "default";
    int candidates_per_model = 1;

    void validate() const;
};

/// Instruction prompt asking for a step-by-step analysis ending in a boxed
/// label. Shared by generation and SFT export.
std::string render_prompt(std::string_view template_id, std::string_view claim_text);

struct GenerationOutcome {
    std::vector<RationaleCandidate> candidates;
    std::vector<std::string> errors;
};

/// Requests `candidates_per_model` completions for one claim. Candidate
/// indices start at `first_index`. Failed requests are recorded in `errors`.
GenerationOutcome generate_rationales(const Claim& claim, const GenerationConfig& config, ChatCompleter& client,
                                      int first_index = 1);

/// Runs every configured generator over every claim with bounded concurrency.
/// Candidate indices are 1..K per claim in generator order.
std::vector<GenerationOutcome> generate_batch(const std::vector<Claim>& claims,
                                              const std::vector<GenerationConfig>& configs, ChatCompleter& client,
                                              std::size_t max_in_flight);

}  // namespace curator
