#pragma once

#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "curator/backends.hpp"
#include "curator/types.hpp"

namespace curator {

struct SelfAttributionParams {
    double zeta = 0.0;      // steps with delta strictly below zeta are unnecessary
    int kappa = 3;          // top steps kept for the sufficiency score
    double epsilon = 0.01;  // tolerance of the minimal-sufficiency search
    bool clamp_sufficiency = false;  // clamp s_suf to [0, 1] before combining
};

struct AttributionProfile {
    std::string claim_id;
    int candidate_index = 0;
    double logp_full = 0.0;
    std::vector<double> deltas;
    double s_nec = 0.0;
    double unnecessary_ratio = 0.0;
    double s_suf = 0.0;
    double phi_s = 0.0;
    std::optional<int> kappa_min;
    bool kappa_insufficient = false;
};

nlohmann::json to_json(const AttributionProfile& profile);
AttributionProfile profile_from_json(const nlohmann::json& record);

/// Scores subsets of one candidate's steps for its predicted label. Subsets
/// are given as ascending step indices, so text order is always preserved;
/// repeated subsets are answered from a per-candidate memo.
class SubsetScorer {
public:
    SubsetScorer(const Claim& claim, const RationaleCandidate& candidate, LogProbOracle& oracle);

    double score(const std::vector<std::size_t>& step_indices);
    double score_all();
    std::size_t step_count() const noexcept { return candidate_.steps.size(); }
    Label label() const noexcept { return label_; }
    /// Distinct subsets sent to the oracle so far.
    std::size_t evaluations() const noexcept { return memo_.size(); }

private:
    const Claim& claim_;
    const RationaleCandidate& candidate_;
    LogProbOracle& oracle_;
    Label label_;
    std::map<std::vector<std::size_t>, double> memo_;
};

struct StepDeltas {
    double logp_full = 0.0;
    std::vector<double> deltas;
};

/// delta_l = ln P(y | x, E) - ln P(y | x, E without step l). Uses L + 1 oracle
/// evaluations. Throws ValidationError for zero steps or a missing prediction.
StepDeltas step_deltas(SubsetScorer& scorer);
StepDeltas step_deltas(const Claim& claim, const RationaleCandidate& candidate, LogProbOracle& oracle);

struct NecessityResult {
    double s_nec = 0.0;
    double ratio = 0.0;
};

/// s_nec = max(0, mean delta) * (1 - ratio), ratio = share of deltas < zeta.
NecessityResult necessity_score(const std::vector<double>& deltas, double zeta = 0.0);

/// Share of steps with delta strictly below zeta.
double unnecessary_ratio(const std::vector<double>& deltas, double zeta = 0.0);

/// Indices of the top-kappa steps by delta (ties to the lower index), returned
/// in ascending index order.
std::vector<std::size_t> top_kappa_indices(const std::vector<double>& deltas, int kappa);

/// s_suf = ln P(y | x, top-kappa steps) - ln P(y | x, E).
double sufficiency_score(SubsetScorer& scorer, const StepDeltas& deltas, int kappa = 3);

struct KappaResult {
    std::optional<int> kappa_min;
    bool insufficient = false;
};

/// Smallest kappa in 1..L with ln P(y | top-kappa) >= (1 - epsilon) * logp_full.
KappaResult minimal_sufficient_kappa(SubsetScorer& scorer, const StepDeltas& deltas, double epsilon = 0.01);

/// phi_s = s_nec * (1 - s_suf).
double self_score(double s_nec, double s_suf);

/// Full per-candidate profile.
AttributionProfile attribute_candidate(const Claim& claim, const RationaleCandidate& candidate, LogProbOracle& oracle,
                                       const SelfAttributionParams& params = {});

}  // namespace curator
