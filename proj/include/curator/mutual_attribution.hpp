#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "curator/backends.hpp"
#include "curator/types.hpp"

namespace curator {

/// Position of one step: (candidate position within the claim's set, step index).
struct StepRef {
    std::size_t candidate = 0;
    std::size_t step = 0;

    auto operator<=>(const StepRef&) const = default;
};

struct KMeansOptions {
    int max_iterations = 100;
    double tolerance = 1e-6;  // stop when no centroid moves farther than this
};

/// Steps of K candidates clustered into M verification perspectives.
struct PerspectiveModel {
    int m = 0;
    std::uint64_t seed = 0;
    /// Unit-length centroid directions (first basis vector for a zero mean).
    std::vector<Embedding> centroids;
    /// assignment[k][l] = perspective of step l of candidate k.
    std::vector<std::vector<int>> assignment;
    int iterations = 0;

    /// Distinct perspectives present in candidate k, ascending.
    std::vector<int> perspectives_of(std::size_t candidate) const;
};

nlohmann::json to_json(const PerspectiveModel& model);

/// Seeded k-means++ and Lloyd iterations under squared Euclidean distance.
/// Ties go to the lower centroid id; an empty cluster takes the point farthest
/// from its current centroid. Throws ValidationError when m < 1 or there are
/// fewer points than m.
PerspectiveModel cluster_perspectives(const std::vector<std::vector<Embedding>>& step_embeddings, int m,
                                      std::uint64_t seed, const KMeansOptions& options = {});

/// Flat k-means on points; returns per-point cluster ids and the raw means.
struct KMeansResult {
    std::vector<int> labels;
    std::vector<Embedding> means;
    int iterations = 0;
};
KMeansResult kmeans(const std::vector<Embedding>& points, int m, std::uint64_t seed, const KMeansOptions& options = {});

/// ln P(y_k | x, E_k) - ln P(y_k | x, E_k without every step in perspective m).
/// Throws ValidationError when candidate k has no step in m.
double perspective_delta(const Claim& claim, const RationaleCandidate& candidate, std::size_t k, int m,
                         const PerspectiveModel& model, LogProbOracle& oracle);

struct PerspectiveImportance {
    std::vector<double> phi;        // phi[m] <= 0
    std::vector<int> occurrence;    // |K_m|
    int k = 0;
};

/// phi(v_m) = -(1/K) * sum over k in K_m of ln(1 + e^{-delta_{m,k}}).
/// `deltas` is keyed by (m, k); perspectives absent from the map get phi = 0.
PerspectiveImportance perspective_importance(const std::map<std::pair<int, std::size_t>, double>& deltas, int K,
                                             int m_count);

/// Sum of phi over the distinct perspectives present in candidate k. With
/// `count_normalized`, divided by the number of those perspectives.
double mutual_score(std::size_t k, const PerspectiveModel& model, const PerspectiveImportance& importance,
                    bool count_normalized = false);

struct MutualParams {
    int m = 8;
    std::uint64_t seed = 13;
    bool count_normalized = false;
    KMeansOptions kmeans;
};

struct ClaimPerspectiveReport {
    std::string claim_id;
    PerspectiveModel model;
    std::vector<int> candidate_indices;  // candidate_index of each position k
    PerspectiveImportance importance;
    std::map<std::pair<int, std::size_t>, double> deltas;
    std::vector<double> phi_m;           // per position k
};

/// Perspective report record for the claim.
nlohmann::json to_json(const ClaimPerspectiveReport& report);

/// Scores every candidate of a claim under an existing assignment (for
/// example a slice of a corpus-wide clustering).
ClaimPerspectiveReport score_perspectives(const Claim& claim, const std::vector<const RationaleCandidate*>& candidates,
                                          PerspectiveModel model, LogProbOracle& oracle,
                                          bool count_normalized = false);

/// Clusters all steps of one claim's candidates and scores every candidate.
/// M is reduced to the number of steps when a claim has fewer steps than M.
/// Candidates must each have at least one step and a predicted label.
ClaimPerspectiveReport mutual_attribution(const Claim& claim, const std::vector<const RationaleCandidate*>& candidates,
                                          EmbeddingOracle& embedder, LogProbOracle& oracle,
                                          const MutualParams& params = {});

}  // namespace curator
