#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curator/backends.hpp"
#include "curator/corpus.hpp"
#include "curator/mutual_attribution.hpp"
#include "curator/rationale_parse.hpp"
#include "curator/self_attribution.hpp"
#include "curator/types.hpp"

namespace curator {

enum class NormalizationMode { Raw, ZScore };
enum class ExportMode { Rationale, LabelOnly };

struct CuratedRecord {
    Claim claim;
    RationaleCandidate candidate;
    double phi_s = 0.0;
    double phi_m = 0.0;
    double combined = 0.0;
};

/// Score line written between stages: identifies the candidate and carries
/// its three scores.
nlohmann::json score_record_json(const CuratedRecord& record);

/// (phi_s + phi_m) / 2. Throws ValidationError on non-finite input.
double combined_score(double phi_s, double phi_m);

/// Combined score for a whole corpus. Raw mode is the arithmetic mean; z-score
/// mode averages corpus-standardized scores (a constant column standardizes
/// to 0).
std::vector<double> combined_scores(const std::vector<std::pair<double, double>>& scores, NormalizationMode mode);

/// Greedy global selection: combined descending, ties by (claim id, candidate
/// index) ascending, at most `per_claim_cap` per claim, stopping at `budget`.
/// The result is ordered by (claim id, candidate index).
std::vector<CuratedRecord> select_curated(std::vector<CuratedRecord> records, std::size_t budget,
                                          std::size_t per_claim_cap);

/// The response text of an exported record: in rationale mode the rationale up
/// to and including its final boxed label; in label-only mode
/// "This message is <label>.".
std::string sft_response(const CuratedRecord& record, ExportMode mode);

/// One {"prompt", "response", "meta"} object per line, written atomically.
void export_sft(const std::vector<CuratedRecord>& records, ExportMode mode, const std::filesystem::path& path,
                const std::string& prompt_template = "default");

// ---------------------------------------------------------------------------
// Pipeline

struct BackendSettings {
    std::string kind = "synthetic";  // "synthetic" | "remote"
    std::filesystem::path weights;   // synthetic: {"bias", "weights": {text: w}}
    std::size_t embedding_dim = 64;
    RemoteConfig remote;
    std::string scoring_model;
    std::string embedding_model;     // empty: hashed bag-of-words embedder
    std::string judge_model;
};

struct PipelineConfig {
    std::filesystem::path claims;
    std::optional<std::filesystem::path> candidates;  // absent: generate
    std::filesystem::path output_dir = "curated_out";
    BackendSettings backend;
    std::vector<GenerationConfig> generation;
    DedupOptions dedup;
    FilterOptions filter;
    SelfAttributionParams self;
    MutualParams mutual;
    bool global_clustering = false;
    std::size_t budget = 200000;
    std::size_t per_claim_cap = 1;
    NormalizationMode normalization = NormalizationMode::Raw;
    ExportMode export_mode = ExportMode::Rationale;
    std::string prompt_template = "default";
    std::size_t max_in_flight = 4;

    void validate() const;
};

/// Reads a config document. Relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const PipelineConfig& config);

/// Oracles built from backend settings.
struct Backends {
    std::shared_ptr<LogProbOracle> scorer;
    std::shared_ptr<EmbeddingOracle> embedder;
    std::shared_ptr<ChatCompleter> chat;  // null for the synthetic backend
};

Backends make_backends(const BackendSettings& settings);

struct FilterRecord {
    std::string claim_id;
    int candidate_index = 0;
    FilterVerdict verdict;
};

nlohmann::json to_json(const FilterRecord& record);

struct FilterStage {
    std::vector<FilterRecord> report;
    std::vector<RationaleCandidate> kept;
    std::size_t orphaned = 0;  // candidates whose claim is not in the corpus
};

/// Orders candidates by claim corpus order then candidate index and applies the
/// heuristic filters.
FilterStage filter_stage(const ClaimCorpus& corpus, std::vector<RationaleCandidate> candidates,
                         const FilterOptions& options);

/// Self-attribution of every candidate with at least one step, in input order.
std::vector<AttributionProfile> attribution_stage(const ClaimCorpus& corpus,
                                                  const std::vector<RationaleCandidate>& candidates,
                                                  LogProbOracle& oracle, const SelfAttributionParams& params,
                                                  std::size_t max_in_flight);

/// Perspective reports per claim, in corpus order. Only candidates with a
/// profile take part.
std::vector<ClaimPerspectiveReport> clustering_stage(const ClaimCorpus& corpus,
                                                     const std::vector<RationaleCandidate>& candidates,
                                                     EmbeddingOracle& embedder, LogProbOracle& oracle,
                                                     const MutualParams& params, bool global, std::size_t max_in_flight);

/// Joins profiles and perspective reports into scored records.
std::vector<CuratedRecord> combine_stage(const ClaimCorpus& corpus, const std::vector<RationaleCandidate>& candidates,
                                         const std::vector<AttributionProfile>& profiles,
                                         const std::vector<ClaimPerspectiveReport>& reports, NormalizationMode mode);

struct PipelineSummary {
    std::size_t claims_loaded = 0;
    std::size_t claims_rejected = 0;
    std::size_t claims_after_dedup = 0;
    std::size_t candidates = 0;
    std::size_t generation_failures = 0;
    std::size_t orphaned_candidates = 0;
    std::size_t post_heuristic = 0;
    std::size_t attributed = 0;
    std::size_t selected = 0;
    std::map<std::string, std::size_t> filter_reasons;

    nlohmann::json to_json() const;
};

/// load -> dedup -> (generate) -> filter -> self-attribution -> clustering ->
/// combine -> select -> export. Each stage writes its report into
/// config.output_dir before the next starts; a failing stage throws StageError
/// naming it.
PipelineSummary run_pipeline(const PipelineConfig& config);

/// As above with caller-supplied oracles.
PipelineSummary run_pipeline(const PipelineConfig& config, Backends& backends);

std::string_view to_string(NormalizationMode mode);
std::string_view to_string(ExportMode mode);
NormalizationMode parse_normalization_mode(std::string_view text);
ExportMode parse_export_mode(std::string_view text);

}  // namespace curator
