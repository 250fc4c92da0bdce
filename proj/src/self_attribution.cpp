#include "curator/self_attribution.hpp"

#include <algorithm>
#include <numeric>

namespace curator {

using nlohmann::json;

json to_json(const AttributionProfile& p) {
    json j{{"claim_id", p.claim_id},
           {"candidate_index", p.candidate_index},
           {"logp_full", p.logp_full},
           {"deltas", p.deltas},
           {"s_nec", p.s_nec},
           {"unnecessary_ratio", p.unnecessary_ratio},
           {"s_suf", p.s_suf},
           {"phi_s", p.phi_s},
           {"kappa_min", nullptr},
           {"kappa_insufficient", p.kappa_insufficient}};
    if (p.kappa_min) j["kappa_min"] = *p.kappa_min;
    return j;
}

AttributionProfile profile_from_json(const json& r) {
    AttributionProfile p;
    p.claim_id = r.at("claim_id").get<std::string>();
    p.candidate_index = r.at("candidate_index").get<int>();
    p.logp_full = r.at("logp_full").get<double>();
    p.deltas = r.at("deltas").get<std::vector<double>>();
    p.s_nec = r.at("s_nec").get<double>();
    p.unnecessary_ratio = r.at("unnecessary_ratio").get<double>();
    p.s_suf = r.at("s_suf").get<double>();
    p.phi_s = r.at("phi_s").get<double>();
    if (auto it = r.find("kappa_min"); it != r.end() && !it->is_null()) p.kappa_min = it->get<int>();
    p.kappa_insufficient = r.value("kappa_insufficient", false);
    return p;
}

SubsetScorer::SubsetScorer(const Claim& claim, const RationaleCandidate& candidate, LogProbOracle& oracle)
    : claim_(claim), candidate_(candidate), oracle_(oracle) {
    if (!candidate.predicted_label) {
        throw ValidationError("candidate " + candidate.claim_id + "#" + std::to_string(candidate.candidate_index) +
                              " has no predicted label");
    }
    label_ = *candidate.predicted_label;
}

double SubsetScorer::score(const std::vector<std::size_t>& step_indices) {
    if (auto it = memo_.find(step_indices); it != memo_.end()) return it->second;
    ScoringRequest request;
    request.claim_text = claim_.text;
    request.label = label_;
    request.step_texts.reserve(step_indices.size());
    for (auto i : step_indices) request.step_texts.push_back(candidate_.steps.at(i).text);
    double value = oracle_.score(request);
    memo_.emplace(step_indices, value);
    return value;
}

double SubsetScorer::score_all() {
    std::vector<std::size_t> all(step_count());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return score(all);
}

StepDeltas step_deltas(SubsetScorer& scorer) {
    const auto n = scorer.step_count();
    if (n == 0) throw ValidationError("cannot attribute a rationale with zero steps");
    StepDeltas out;
    out.logp_full = scorer.score_all();
    out.deltas.reserve(n);
    std::vector<std::size_t> without;
    for (std::size_t l = 0; l < n; ++l) {
        without.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (i != l) without.push_back(i);
        }
        out.deltas.push_back(out.logp_full - scorer.score(without));
    }
    return out;
}

StepDeltas step_deltas(const Claim& claim, const RationaleCandidate& candidate, LogProbOracle& oracle) {
    SubsetScorer scorer(claim, candidate, oracle);
    return step_deltas(scorer);
}

double unnecessary_ratio(const std::vector<double>& deltas, double zeta) {
    if (deltas.empty()) throw ValidationError("unnecessary ratio of an empty delta list");
    auto below = std::count_if(deltas.begin(), deltas.end(), [zeta](double d) { return d < zeta; });
    return static_cast<double>(below) / static_cast<double>(deltas.size());
}

NecessityResult necessity_score(const std::vector<double>& deltas, double zeta) {
    if (deltas.empty()) throw ValidationError("necessity score of an empty delta list");
    const double mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(deltas.size());
    NecessityResult r;
    r.ratio = unnecessary_ratio(deltas, zeta);
    r.s_nec = std::max(0.0, mean) * (1.0 - r.ratio);
    return r;
}

std::vector<std::size_t> top_kappa_indices(const std::vector<double>& deltas, int kappa) {
    if (kappa < 1) throw ValidationError("kappa must be >= 1");
    std::vector<std::size_t> order(deltas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return deltas[a] > deltas[b]; });
    order.resize(std::min(order.size(), static_cast<std::size_t>(kappa)));
    std::sort(order.begin(), order.end());
    return order;
}

double sufficiency_score(SubsetScorer& scorer, const StepDeltas& deltas, int kappa) {
    return scorer.score(top_kappa_indices(deltas.deltas, kappa)) - deltas.logp_full;
}

KappaResult minimal_sufficient_kappa(SubsetScorer& scorer, const StepDeltas& deltas, double epsilon) {
    const double threshold = (1.0 - epsilon) * deltas.logp_full;
    const int n = static_cast<int>(deltas.deltas.size());
    for (int kappa = 1; kappa <= n; ++kappa) {
        if (scorer.score(top_kappa_indices(deltas.deltas, kappa)) >= threshold) return {kappa, false};
    }
    return {std::nullopt, true};
}

double self_score(double s_nec, double s_suf) { return s_nec * (1.0 - s_suf); }

AttributionProfile attribute_candidate(const Claim& claim, const RationaleCandidate& candidate, LogProbOracle& oracle,
                                       const SelfAttributionParams& params) {
    SubsetScorer scorer(claim, candidate, oracle);
    auto deltas = step_deltas(scorer);
    auto nec = necessity_score(deltas.deltas, params.zeta);

    AttributionProfile p;
    p.claim_id = candidate.claim_id;
    p.candidate_index = candidate.candidate_index;
    p.logp_full = deltas.logp_full;
    p.s_nec = nec.s_nec;
    p.unnecessary_ratio = nec.ratio;
    p.s_suf = sufficiency_score(scorer, deltas, params.kappa);
    const double suf = params.clamp_sufficiency ? std::clamp(p.s_suf, 0.0, 1.0) : p.s_suf;
    p.phi_s = self_score(p.s_nec, suf);
    auto kappa = minimal_sufficient_kappa(scorer, deltas, params.epsilon);
    p.kappa_min = kappa.kappa_min;
    p.kappa_insufficient = kappa.insufficient;
    p.deltas = std::move(deltas.deltas);
    return p;
}

}  // namespace curator
