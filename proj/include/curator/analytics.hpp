#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curator/backends.hpp"
#include "curator/self_attribution.hpp"
#include "curator/types.hpp"

namespace curator {

struct ConfusionCounts {
    std::int64_t tp_fake = 0, fp_fake = 0, fn_fake = 0;
    std::int64_t tp_real = 0, fp_real = 0, fn_real = 0;
    std::int64_t unparsed = 0;

    bool operator==(const ConfusionCounts&) const = default;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct DetectionMetrics {
    ConfusionCounts counts;
    std::int64_t total = 0;
    double accuracy = 0.0;
    ClassMetrics fake;
    ClassMetrics real;
};

/// Precision/recall/F1 from raw counts; every ratio with a zero denominator is 0.
ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn);

/// Accuracy and per-class metrics. An unparsed prediction is wrong and counts
/// as a miss for its gold class. Throws ValidationError on empty input.
DetectionMetrics detection_metrics(const std::vector<std::pair<Label, std::optional<Label>>>& pairs);

nlohmann::json to_json(const DetectionMetrics& metrics);

/// Numeric bins are [edges[i], edges[i+1]) with the last bin closed; values
/// outside the range land in the end bins. Categorical histograms carry labels
/// instead of edges.
struct Histogram {
    std::vector<double> edges;
    std::vector<std::string> categories;
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;

    bool categorical() const noexcept { return !categories.empty() || edges.empty(); }
    /// "edge,count" rows (left edge) or "category,count" rows.
    std::string to_csv() const;
};

nlohmann::json to_json(const Histogram& histogram);

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

Histogram numeric_histogram(const std::vector<double>& values, const std::vector<double>& edges);

struct DeltaDistribution {
    Histogram correct;
    Histogram incorrect;
    double negative_fraction_correct = 0.0;
    double negative_fraction_incorrect = 0.0;
};

/// Pools step deltas split by prediction correctness; negative means strictly < 0.
DeltaDistribution delta_distribution(const std::vector<AttributionProfile>& profiles,
                                     const std::vector<bool>& correct, const std::vector<double>& edges);

/// kappa_min per profile; insufficient profiles land in "L (insufficient)".
Histogram kappa_histogram(const std::vector<AttributionProfile>& profiles);

Histogram step_count_histogram(const std::vector<RationaleCandidate>& candidates);

/// Ten uniform bins on [0, 1].
Histogram unnecessary_ratio_histogram(const std::vector<AttributionProfile>& profiles);

/// Mean token_count per generator; generators without candidates are absent.
std::map<std::string, double> token_consumption(const std::vector<RationaleCandidate>& candidates);

// ---------------------------------------------------------------------------
// Judge-based rationale quality

struct JudgeScores {
    int misleadingness = 0;
    int informativeness = 0;
    int readability = 0;

    bool operator==(const JudgeScores&) const = default;
};

struct JudgeItem {
    std::string claim_text;
    Label gold = Label::Real;
    std::string rationale;
};

std::string render_judge_prompt(const JudgeItem& item);

/// Accepts "M:2 I:4 R:4" style replies, or exactly three integers in M, I, R
/// order. Every score must be an integer in 1..5.
std::optional<JudgeScores> parse_judge_reply(std::string_view reply);

struct JudgeReport {
    std::vector<std::optional<JudgeScores>> scores;
    double mean_misleadingness = 0.0;
    double mean_informativeness = 0.0;
    double mean_readability = 0.0;
    std::size_t missing = 0;
};

nlohmann::json to_json(const JudgeReport& report);

/// Scores each item once, retrying an unparsable reply once before recording
/// it as missing. Throws Error when every item is missing.
JudgeReport judge_scores(const std::vector<JudgeItem>& items, ChatCompleter& judge, const std::string& model,
                         std::size_t max_in_flight = 1);

}  // namespace curator
