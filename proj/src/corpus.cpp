#include "curator/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "curator/rationale_parse.hpp"
#include "curator/text.hpp"

namespace curator {

using nlohmann::json;

std::string_view to_string(Label label) { return label == Label::Real ? "real" : "fake"; }

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "eval"; }

std::optional<Label> parse_label(std::string_view text) {
    if (text == "real") return Label::Real;
    if (text == "fake") return Label::Fake;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "eval") return Split::Eval;
    return std::nullopt;
}

void to_json(json& j, const Claim& claim) {
    j = json{{"id", claim.id},
             {"text", claim.text},
             {"label", to_string(claim.label)},
             {"source", claim.source},
             {"split", to_string(claim.split)}};
}

json to_json(const RationaleCandidate& candidate) {
    json j{{"claim_id", candidate.claim_id},
           {"generator", candidate.generator},
           {"raw_text", candidate.raw_text},
           {"predicted_label", nullptr},
           {"candidate_index", candidate.candidate_index},
           {"token_count", candidate.token_count},
           {"truncated", candidate.truncated}};
    if (candidate.predicted_label) j["predicted_label"] = to_string(*candidate.predicted_label);
    return j;
}

json to_json(const Reject& reject) {
    json j = reject.record.is_object() ? reject.record : json{{"record", reject.record}};
    j["reason"] = reject.reason;
    j["line"] = reject.line;
    return j;
}

std::vector<std::pair<std::size_t, json>> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<std::pair<std::size_t, json>> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        try {
            out.emplace_back(number, json::parse(line));
        } catch (const json::parse_error& e) {
            throw IoError(path.string() + ":" + std::to_string(number) + ": malformed record: " + e.what());
        }
    }
    if (in.bad()) throw IoError("read failure on " + path.string());
    return out;
}

namespace {

std::optional<std::string> string_field(const json& record, const char* key) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

// Returns an empty string when the record is valid, the rejection reason otherwise.
std::string validate_claim(const json& record, Claim& claim) {
    if (!record.is_object()) return "record is not an object";
    auto id = string_field(record, "id");
    if (!id || id->empty()) return "missing id";
    auto text = string_field(record, "text");
    if (!text || trim(*text).empty()) return "empty text";
    auto label_text = string_field(record, "label");
    auto label = label_text ? parse_label(*label_text) : std::nullopt;
    if (!label) return "invalid label";
    Split split = Split::Train;
    if (record.contains("split")) {
        auto split_text = string_field(record, "split");
        auto parsed = split_text ? parse_split(*split_text) : std::nullopt;
        if (!parsed) return "invalid split";
        split = *parsed;
    }
    claim.id = *id;
    claim.text = *text;
    claim.label = *label;
    claim.source = string_field(record, "source").value_or("");
    claim.split = split;
    return {};
}

}  // namespace

ClaimLoad load_claims(const std::filesystem::path& path) {
    ClaimLoad result;
    result.corpus.provenance.push_back(path.string());
    std::unordered_map<std::string, std::size_t> seen;
    for (auto& [line, record] : read_jsonl(path)) {
        Claim claim;
        if (auto reason = validate_claim(record, claim); !reason.empty()) {
            result.rejects.push_back({line, std::move(reason), std::move(record)});
            continue;
        }
        auto [it, inserted] = seen.emplace(claim.id, line);
        if (!inserted) {
            throw ValidationError(path.string() + ": duplicate claim id '" + claim.id + "' on lines " +
                                  std::to_string(it->second) + " and " + std::to_string(line));
        }
        result.corpus.claims.push_back(std::move(claim));
    }
    return result;
}

RationaleCandidate make_candidate(std::string claim_id, std::string generator, std::string raw_text,
                                  int candidate_index, bool truncated) {
    RationaleCandidate c;
    c.claim_id = std::move(claim_id);
    c.generator = std::move(generator);
    c.raw_text = std::move(raw_text);
    c.steps = segment_steps(c.raw_text);
    c.predicted_label = extract_prediction(c.raw_text);
    c.token_count = static_cast<std::int64_t>(count_tokens(c.raw_text));
    c.truncated = truncated;
    c.candidate_index = candidate_index;
    return c;
}

CandidateLoad load_candidates(const std::filesystem::path& path) {
    CandidateLoad result;
    for (auto& [line, record] : read_jsonl(path)) {
        auto reject = [&](std::string reason) { result.rejects.push_back({line, std::move(reason), record}); };
        if (!record.is_object()) {
            reject("record is not an object");
            continue;
        }
        auto claim_id = string_field(record, "claim_id");
        auto raw_text = string_field(record, "raw_text");
        auto index = record.find("candidate_index");
        if (!claim_id || claim_id->empty()) {
            reject("missing claim_id");
            continue;
        }
        if (!raw_text) {
            reject("missing raw_text");
            continue;
        }
        if (index == record.end() || !index->is_number_integer() || index->get<int>() < 1) {
            reject("invalid candidate_index");
            continue;
        }
        auto c = make_candidate(*claim_id, string_field(record, "generator").value_or(""), *raw_text,
                                index->get<int>(), record.value("truncated", false));
        if (auto it = record.find("predicted_label"); it != record.end()) {
            if (it->is_null()) {
                c.predicted_label.reset();
            } else if (auto label = it->is_string() ? parse_label(it->get<std::string>()) : std::nullopt) {
                c.predicted_label = label;
            } else {
                reject("invalid predicted_label");
                continue;
            }
        }
        if (auto it = record.find("token_count"); it != record.end() && it->is_number_integer()) {
            c.token_count = it->get<std::int64_t>();
        }
        result.candidates.push_back(std::move(c));
    }
    return result;
}

namespace {

std::vector<std::string> key_tokens(std::string_view text, const DedupOptions& options) {
    auto tokens = whitespace_tokens(text);
    if (tokens.size() > options.prefix_tokens) tokens.resize(options.prefix_tokens);
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (auto t : tokens) {
        std::string s(t);
        if (!options.case_sensitive) {
            std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
        }
        out.push_back(std::move(s));
    }
    return out;
}

// Token trie over kept prefix keys; `terminal` marks the end of a kept key.
struct PrefixTrie {
    struct Node {
        std::map<std::string, std::size_t> children;
        bool terminal = false;
    };
    std::vector<Node> nodes{Node{}};

    // True when `tokens` is a prefix of a stored key or a stored key is a
    // prefix of `tokens`.
    bool collides(const std::vector<std::string>& tokens) const {
        std::size_t at = 0;
        for (const auto& t : tokens) {
            if (nodes[at].terminal) return true;
            auto it = nodes[at].children.find(t);
            if (it == nodes[at].children.end()) return false;
            at = it->second;
        }
        return true;
    }

    void insert(const std::vector<std::string>& tokens) {
        std::size_t at = 0;
        for (const auto& t : tokens) {
            auto it = nodes[at].children.find(t);
            if (it == nodes[at].children.end()) {
                nodes.emplace_back();
                it = nodes[at].children.emplace(t, nodes.size() - 1).first;
            }
            at = it->second;
        }
        nodes[at].terminal = true;
    }
};

}  // namespace

std::string prefix_key(std::string_view text, const DedupOptions& options) {
    std::string key;
    for (const auto& t : key_tokens(text, options)) {
        if (!key.empty()) key += ' ';
        key += t;
    }
    return key;
}

ClaimCorpus dedup_claims(const ClaimCorpus& corpus, const DedupOptions& options) {
    if (options.prefix_tokens < 1) throw ValidationError("prefix_tokens must be >= 1");
    ClaimCorpus out;
    out.provenance = corpus.provenance;
    PrefixTrie trie;
    for (const auto& claim : corpus.claims) {
        auto tokens = key_tokens(claim.text, options);
        if (trie.collides(tokens)) continue;
        trie.insert(tokens);
        out.claims.push_back(claim);
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string() + ": unable to open temp file");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("cannot write " + path.string() + ": write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot write " + path.string() + ": " + ec.message());
    }
}

void save_jsonl(const std::vector<json>& records, const std::filesystem::path& path) {
    std::string buffer;
    for (const auto& r : records) {
        buffer += r.dump();
        buffer += '\n';
    }
    write_file_atomic(path, buffer);
}

void save_records(const ClaimCorpus& corpus, const std::filesystem::path& path) {
    std::vector<json> records(corpus.claims.begin(), corpus.claims.end());
    save_jsonl(records, path);
}

void save_records(const std::vector<RationaleCandidate>& candidates, const std::filesystem::path& path) {
    std::vector<json> records;
    records.reserve(candidates.size());
    for (const auto& c : candidates) records.push_back(to_json(c));
    save_jsonl(records, path);
}

void save_records(const std::vector<Reject>& rejects, const std::filesystem::path& path) {
    std::vector<json> records;
    records.reserve(rejects.size());
    for (const auto& r : rejects) records.push_back(to_json(r));
    save_jsonl(records, path);
}

}  // namespace curator
