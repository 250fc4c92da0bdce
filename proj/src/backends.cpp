#include "curator/backends.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <thread>

#include <httplib.h>

#include "curator/corpus.hpp"
#include "curator/parallel.hpp"
#include "curator/text.hpp"

namespace curator {

using nlohmann::json;

std::string_view to_string(BackendErrorKind kind) {
    switch (kind) {
        case BackendErrorKind::Transport: return "transport";
        case BackendErrorKind::HttpStatus: return "http_status";
        case BackendErrorKind::MissingLogprobs: return "missing_logprobs";
        case BackendErrorKind::BadResponse: return "bad_response";
        case BackendErrorKind::UnknownStep: return "unknown_step";
    }
    return "unknown";
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double log_sigmoid(double z) { return -softplus(-z); }

// ---------------------------------------------------------------------------

SyntheticLogisticOracle::SyntheticLogisticOracle(std::map<std::string, double> step_weights, double bias)
    : weights_(std::move(step_weights)), bias_(bias) {}

SyntheticLogisticOracle SyntheticLogisticOracle::from_json(const json& doc) {
    std::map<std::string, double> weights;
    if (auto it = doc.find("weights"); it != doc.end()) {
        if (!it->is_object()) throw ValidationError("synthetic weights must be an object of text -> number");
        for (auto& [text, w] : it->items()) {
            if (!w.is_number()) throw ValidationError("synthetic weight for '" + text + "' is not a number");
            weights.emplace(text, w.get<double>());
        }
    }
    return SyntheticLogisticOracle(std::move(weights), doc.value("bias", 0.0));
}

double SyntheticLogisticOracle::logit(const std::vector<std::string>& step_texts) const {
    double z = bias_;
    for (const auto& text : step_texts) {
        auto it = weights_.find(text);
        if (it == weights_.end()) {
            throw BackendError(BackendErrorKind::UnknownStep, "synthetic oracle has no weight for step: " + text,
                               false);
        }
        z += it->second;
    }
    return z;
}

double SyntheticLogisticOracle::score(const ScoringRequest& request) {
    ++calls_;
    double z = logit(request.step_texts);
    return request.label == Label::Real ? log_sigmoid(z) : log_sigmoid(-z);
}

// ---------------------------------------------------------------------------

void normalize_or_basis(Embedding& v) {
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 == 0.0 || !std::isfinite(norm2)) {
        std::fill(v.begin(), v.end(), 0.0);
        if (!v.empty()) v[0] = 1.0;
        return;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
}

Embedding HashingEmbedder::embed_one(std::string_view text) const {
    Embedding v(dim_, 0.0);
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        v[fnv1a64(token) % dim_] += 1.0;
        token.clear();
    };
    for (unsigned char ch : text) {
        bool word = (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch >= 0x80;
        if (word) token += static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch + ('a' - 'A') : ch);
        else flush();
    }
    flush();
    normalize_or_basis(v);
    return v;
}

std::vector<Embedding> HashingEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

// ---------------------------------------------------------------------------

RemoteClient::RemoteClient(RemoteConfig config) : config_(std::move(config)) {
    const auto& url = config_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("base_url must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    host_ = url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }
}

json RemoteClient::post_once(const std::string& path, const std::string& payload) const {
    ++attempts_;
    httplib::Client cli(host_);
    cli.set_connection_timeout(config_.timeout_seconds, 0);
    cli.set_read_timeout(config_.timeout_seconds, 0);
    cli.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = cli.Post(prefix_ + path, headers, payload, "application/json");
    if (!res) {
        throw BackendError(BackendErrorKind::Transport,
                           "POST " + host_ + prefix_ + path + " failed: " + httplib::to_string(res.error()), true);
    }
    if (res->status < 200 || res->status >= 300) {
        bool retryable = res->status == 429 || res->status >= 500;
        throw BackendError(BackendErrorKind::HttpStatus,
                           "POST " + prefix_ + path + " returned HTTP " + std::to_string(res->status), retryable,
                           res->status);
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw BackendError(BackendErrorKind::BadResponse, "POST " + prefix_ + path + ": invalid JSON: " + e.what(),
                           false, res->status);
    }
}

json RemoteClient::post_json(const std::string& path, const json& body) const {
    const auto payload = body.dump();
    for (int attempt = 0;; ++attempt) {
        try {
            return post_once(path, payload);
        } catch (const BackendError& e) {
            if (!e.retryable() || attempt >= config_.retry_budget) throw;
            if (config_.backoff_ms > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << std::min(attempt, 10)));
            }
        }
    }
}

json to_request_body(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    json body{{"model", request.model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (request.top_logprobs) {
        body["logprobs"] = true;
        body["top_logprobs"] = *request.top_logprobs;
    }
    return body;
}

namespace {

const json& first_choice(const json& response) {
    auto it = response.find("choices");
    if (it == response.end() || !it->is_array() || it->empty() || !(*it)[0].is_object()) {
        throw BackendError(BackendErrorKind::BadResponse, "completion response has no choices", false);
    }
    return (*it)[0];
}

}  // namespace

ChatResult RemoteChatClient::complete(const ChatRequest& request) {
    ChatResult result;
    result.raw = client_->post_json("/v1/chat/completions", to_request_body(request));
    const auto& choice = first_choice(result.raw);
    if (auto msg = choice.find("message"); msg != choice.end() && msg->is_object()) {
        if (auto c = msg->find("content"); c != msg->end() && c->is_string()) result.content = c->get<std::string>();
    }
    if (auto fr = choice.find("finish_reason"); fr != choice.end() && fr->is_string()) {
        result.finish_reason = fr->get<std::string>();
    }
    if (auto usage = result.raw.find("usage"); usage != result.raw.end() && usage->is_object()) {
        if (auto ct = usage->find("completion_tokens"); ct != usage->end() && ct->is_number_integer()) {
            result.completion_tokens = ct->get<std::int64_t>();
        }
    }
    return result;
}

// ---------------------------------------------------------------------------

std::vector<ChatMessage> verdict_messages(const ScoringRequest& request) {
    std::string user = "Claim:\n";
    user += request.claim_text;
    user += "\n\nVerification steps:\n";
    if (request.step_texts.empty()) user += "(none)\n";
    for (std::size_t i = 0; i < request.step_texts.size(); ++i) {
        user += "[" + std::to_string(i + 1) + "] ";
        user += request.step_texts[i];
        user += '\n';
    }
    user += "\nBased only on the claim and the verification steps above, is the claim real or fake? "
            "Answer with exactly one word: real or fake.";
    return {{"system", "You are a careful fact-checking assistant. You judge the veracity of social media claims."},
            {"user", std::move(user)}};
}

double label_logprob_from_response(const json& response, Label label) {
    const auto& choice = first_choice(response);
    auto lp = choice.find("logprobs");
    if (lp == choice.end() || !lp->is_object() || !lp->contains("content") || !(*lp)["content"].is_array() ||
        (*lp)["content"].empty()) {
        throw BackendError(BackendErrorKind::MissingLogprobs, "completion response carries no token logprobs", false);
    }
    const auto& content = (*lp)["content"];
    const std::string target(to_string(label));
    auto norm = [](const json& entry) { return to_lower_ascii(trim(entry.value("token", std::string{}))); };

    // Generated tokens spelling the label.
    std::string spelled;
    double sum = 0.0;
    for (const auto& entry : content) {
        spelled += norm(entry);
        sum += entry.value("logprob", 0.0);
        if (spelled == target) return std::min(sum, 0.0);
        if (target.rfind(spelled, 0) != 0) break;
    }

    // Alternatives at the first position.
    const auto& first = content[0];
    auto top = first.find("top_logprobs");
    if (top == first.end() || !top->is_array() || top->empty()) {
        throw BackendError(BackendErrorKind::MissingLogprobs, "no top_logprobs for the verdict position", false);
    }
    double floor = 0.0;
    for (const auto& alt : *top) {
        double value = alt.value("logprob", -std::numeric_limits<double>::infinity());
        if (norm(alt) == target) return std::min(value, 0.0);
        floor = std::min(floor, value);
    }
    return floor;
}

RemoteLogProbOracle::RemoteLogProbOracle(std::shared_ptr<const RemoteClient> client, std::string model,
                                         int top_logprobs)
    : client_(std::move(client)), model_(std::move(model)), top_logprobs_(top_logprobs) {}

std::string RemoteLogProbOracle::cache_key(std::string_view model, const ScoringRequest& request) {
    // Length-prefixed fields so distinct tuples never serialize identically.
    std::string canonical;
    auto field = [&](std::string_view s) {
        canonical += std::to_string(s.size());
        canonical += ':';
        canonical += s;
    };
    field(model);
    field(request.claim_text);
    field(to_string(request.label));
    canonical += std::to_string(request.step_texts.size());
    for (const auto& s : request.step_texts) field(s);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(fnv1a64(canonical)),
                  static_cast<unsigned long long>(fnv1a64(canonical, 0x84222325cbf29ce4ULL)));
    return buf;
}

double RemoteLogProbOracle::score(const ScoringRequest& request) {
    auto key = cache_key(model_, request);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    ChatRequest chat;
    chat.model = model_;
    chat.messages = verdict_messages(request);
    chat.temperature = 0.0;
    chat.max_tokens = 2;
    chat.top_logprobs = top_logprobs_;
    auto response = client_->post_json("/v1/chat/completions", to_request_body(chat));
    double value = label_logprob_from_response(response, request.label);
    std::lock_guard lock(mutex_);
    cache_.emplace(std::move(key), value);
    return value;
}

std::size_t RemoteLogProbOracle::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::vector<Embedding> RemoteEmbedder::embed(const std::vector<std::string>& texts) {
    auto response = client_->post_json("/v1/embeddings", json{{"model", model_}, {"input", texts}});
    auto data = response.find("data");
    if (data == response.end() || !data->is_array() || data->size() != texts.size()) {
        throw BackendError(BackendErrorKind::BadResponse, "embedding response has the wrong number of vectors", false);
    }
    std::vector<Embedding> out(texts.size());
    std::size_t dim = 0;
    for (std::size_t pos = 0; pos < data->size(); ++pos) {
        const auto& item = (*data)[pos];
        std::size_t index = item.value("index", pos);
        if (index >= out.size() || !out[index].empty() || !item.contains("embedding")) {
            throw BackendError(BackendErrorKind::BadResponse, "embedding response has a bad index", false);
        }
        out[index] = item["embedding"].get<Embedding>();
        if (dim == 0) dim = out[index].size();
        if (out[index].size() != dim || dim == 0) {
            throw BackendError(BackendErrorKind::BadResponse, "embedding dimensions differ", false);
        }
        normalize_or_basis(out[index]);
    }
    return out;
}

// ---------------------------------------------------------------------------

void GenerationConfig::validate() const {
    if (model.empty()) throw ValidationError("generation model is empty");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw ValidationError("temperature must be in [0, 2]");
    if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
    if (candidates_per_model < 1) throw ValidationError("candidates_per_model must be >= 1");
}

std::string render_prompt(std::string_view template_id, std::string_view claim_text) {
    if (template_id != "default") throw ValidationError("unknown prompt template: " + std::string(template_id));
    std::string prompt =
        "You are an expert fact-checker. Determine whether the following social media claim is real or fake.\n\n"
        "Claim: ";
    prompt += claim_text;
    prompt +=
        "\n\nAnalyze the claim step by step. Write each verification step as a numbered item that checks one "
        "aspect of the claim, such as its source, its statistics or its consistency with established knowledge. "
        "End your answer with \\boxed{real} or \\boxed{fake}.";
    return prompt;
}

GenerationOutcome generate_rationales(const Claim& claim, const GenerationConfig& config, ChatCompleter& client,
                                      int first_index) {
    config.validate();
    GenerationOutcome outcome;
    ChatRequest request;
    request.model = config.model;
    request.temperature = config.temperature;
    request.max_tokens = config.max_tokens;
    request.messages = {{"user", render_prompt(config.prompt_template, claim.text)}};
    for (int i = 0; i < config.candidates_per_model; ++i) {
        try {
            auto result = client.complete(request);
            auto candidate = make_candidate(claim.id, config.model, result.content, first_index + i,
                                            result.finish_reason == "length");
            if (result.completion_tokens) candidate.token_count = *result.completion_tokens;
            outcome.candidates.push_back(std::move(candidate));
        } catch (const BackendError& e) {
            outcome.errors.push_back(claim.id + " [" + config.model + "]: " + e.what());
        }
    }
    return outcome;
}

std::vector<GenerationOutcome> generate_batch(const std::vector<Claim>& claims,
                                              const std::vector<GenerationConfig>& configs, ChatCompleter& client,
                                              std::size_t max_in_flight) {
    for (const auto& c : configs) c.validate();
    std::vector<GenerationOutcome> out(claims.size());
    parallel_for(claims.size(), max_in_flight, [&](std::size_t i) {
        int next_index = 1;
        for (const auto& config : configs) {
            auto part = generate_rationales(claims[i], config, client, next_index);
            next_index += config.candidates_per_model;
            for (auto& c : part.candidates) out[i].candidates.push_back(std::move(c));
            for (auto& e : part.errors) out[i].errors.push_back(std::move(e));
        }
    });
    return out;
}

}  // namespace curator
