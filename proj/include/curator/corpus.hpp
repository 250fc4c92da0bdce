#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curator/types.hpp"

namespace curator {

/// A line that parsed as JSON but failed validation.
struct Reject {
    std::size_t line = 0;
    std::string reason;
    nlohmann::json record;
};

struct ClaimLoad {
    ClaimCorpus corpus;
    std::vector<Reject> rejects;
};

struct CandidateLoad {
    std::vector<RationaleCandidate> candidates;
    std::vector<Reject> rejects;
};

struct DedupOptions {
    std::size_t prefix_tokens = 100;
    bool case_sensitive = true;
};

// JSON mapping for the line-delimited record schemas.
void to_json(nlohmann::json& j, const Claim& claim);
nlohmann::json to_json(const RationaleCandidate& candidate);
nlohmann::json to_json(const Reject& reject);

/// Reads a line-delimited JSON file. Blank lines are skipped; a line that is
/// not valid JSON throws IoError naming the 1-based line number.
std::vector<std::pair<std::size_t, nlohmann::json>> read_jsonl(const std::filesystem::path& path);

/// Loads claims in file order. Invalid records go to `rejects`; a duplicate id
/// is a hard error naming both lines.
ClaimLoad load_claims(const std::filesystem::path& path);

/// Loads rationale candidates and re-segments their steps. A missing
/// `predicted_label` key is filled from the text; a present null is kept.
CandidateLoad load_candidates(const std::filesystem::path& path);

/// Builds a candidate from raw generated text: segments steps, parses the boxed
/// answer and counts whitespace tokens.
RationaleCandidate make_candidate(std::string claim_id, std::string generator, std::string raw_text,
                                  int candidate_index, bool truncated = false);

/// Prefix key used for deduplication: the first min(prefix_tokens, length)
/// whitespace tokens joined by one space.
std::string prefix_key(std::string_view text, const DedupOptions& options = {});

/// Keeps the first claim of every prefix key, in first-occurrence order. A
/// claim whose key extends an earlier, shorter claim's full token sequence is
/// also treated as a duplicate.
ClaimCorpus dedup_claims(const ClaimCorpus& corpus, const DedupOptions& options = {});

/// Writes one JSON document per line via a temp file and rename.
void save_jsonl(const std::vector<nlohmann::json>& records, const std::filesystem::path& path);

void save_records(const ClaimCorpus& corpus, const std::filesystem::path& path);
void save_records(const std::vector<RationaleCandidate>& candidates, const std::filesystem::path& path);
void save_records(const std::vector<Reject>& rejects, const std::filesystem::path& path);

/// Atomically writes arbitrary bytes (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace curator
