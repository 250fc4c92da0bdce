#include "curator/mutual_attribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "curator/self_attribution.hpp"

namespace curator {

using nlohmann::json;

namespace {

double squared_distance(const Embedding& a, const Embedding& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

// mt19937_64 output is fixed by the standard; the distributions are not, so
// uniform draws are derived by hand.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<Embedding> kmeanspp_init(const std::vector<Embedding>& points, int m, std::mt19937_64& rng) {
    const auto n = points.size();
    std::vector<bool> chosen(n, false);
    std::vector<Embedding> centers;
    auto first = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
    chosen[first] = true;
    centers.push_back(points[first]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centers[0]);

    while (static_cast<int>(centers.size()) < m) {
        double total = 0.0;
        for (double d : d2) total += d;
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                cumulative += d2[i];
                pick = i;
                if (cumulative > target) break;
            }
        } else {
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        chosen[pick] = true;
        centers.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
    }
    return centers;
}

int nearest(const Embedding& p, const std::vector<Embedding>& centers) {
    int best = 0;
    double best_d = squared_distance(p, centers[0]);
    for (std::size_t j = 1; j < centers.size(); ++j) {
        double d = squared_distance(p, centers[j]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

}  // namespace

KMeansResult kmeans(const std::vector<Embedding>& points, int m, std::uint64_t seed, const KMeansOptions& options) {
    if (m < 1) throw ValidationError("number of perspectives must be >= 1");
    if (points.size() < static_cast<std::size_t>(m)) {
        throw ValidationError("cannot form " + std::to_string(m) + " perspectives from " +
                              std::to_string(points.size()) + " steps");
    }
    const std::size_t dim = points[0].size();
    for (const auto& p : points) {
        if (p.size() != dim) throw ValidationError("step embeddings have different dimensions");
    }
    std::mt19937_64 rng(seed);
    KMeansResult r;
    r.means = kmeanspp_init(points, m, rng);
    r.labels.assign(points.size(), 0);

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        r.iterations = iter;
        std::vector<std::size_t> sizes(m, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            r.labels[i] = nearest(points[i], r.means);
            ++sizes[r.labels[i]];
        }
        for (int j = 0; j < m; ++j) {
            if (sizes[j] != 0) continue;
            std::size_t far = points.size();
            double far_d = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (sizes[r.labels[i]] < 2) continue;
                double d = squared_distance(points[i], r.means[r.labels[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == points.size()) break;
            --sizes[r.labels[far]];
            r.labels[far] = j;
            sizes[j] = 1;
        }

        std::vector<Embedding> next(m, Embedding(dim, 0.0));
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t d = 0; d < dim; ++d) next[r.labels[i]][d] += points[i][d];
        }
        double movement = 0.0;
        for (int j = 0; j < m; ++j) {
            if (sizes[j] == 0) {
                next[j] = r.means[j];
                continue;
            }
            for (double& x : next[j]) x /= static_cast<double>(sizes[j]);
            movement = std::max(movement, std::sqrt(squared_distance(next[j], r.means[j])));
        }
        r.means = std::move(next);
        if (movement < options.tolerance) break;
    }
    return r;
}

std::vector<int> PerspectiveModel::perspectives_of(std::size_t candidate) const {
    std::set<int> present(assignment.at(candidate).begin(), assignment.at(candidate).end());
    return {present.begin(), present.end()};
}

json to_json(const PerspectiveModel& model) {
    json assignment = json::array();
    for (std::size_t k = 0; k < model.assignment.size(); ++k) {
        for (std::size_t l = 0; l < model.assignment[k].size(); ++l) {
            assignment.push_back({{"candidate", k}, {"step_index", l}, {"perspective", model.assignment[k][l]}});
        }
    }
    return json{{"M", model.m},
                {"seed", model.seed},
                {"iterations", model.iterations},
                {"centroids", model.centroids},
                {"assignment", std::move(assignment)}};
}

PerspectiveModel cluster_perspectives(const std::vector<std::vector<Embedding>>& step_embeddings, int m,
                                      std::uint64_t seed, const KMeansOptions& options) {
    std::vector<Embedding> flat;
    for (const auto& steps : step_embeddings) flat.insert(flat.end(), steps.begin(), steps.end());
    auto result = kmeans(flat, m, seed, options);

    PerspectiveModel model;
    model.m = m;
    model.seed = seed;
    model.iterations = result.iterations;
    model.centroids = std::move(result.means);
    for (auto& c : model.centroids) normalize_or_basis(c);
    std::size_t at = 0;
    for (const auto& steps : step_embeddings) {
        model.assignment.emplace_back(result.labels.begin() + static_cast<std::ptrdiff_t>(at),
                                      result.labels.begin() + static_cast<std::ptrdiff_t>(at + steps.size()));
        at += steps.size();
    }
    return model;
}

namespace {

double perspective_delta(SubsetScorer& scorer, std::size_t k, int m, const PerspectiveModel& model) {
    const auto& assigned = model.assignment.at(k);
    std::vector<std::size_t> keep;
    bool present = false;
    for (std::size_t l = 0; l < assigned.size(); ++l) {
        if (assigned[l] == m) present = true;
        else keep.push_back(l);
    }
    if (!present) {
        throw ValidationError("perspective " + std::to_string(m) + " is not present in candidate " + std::to_string(k));
    }
    return scorer.score_all() - scorer.score(keep);
}

}  // namespace

double perspective_delta(const Claim& claim, const RationaleCandidate& candidate, std::size_t k, int m,
                         const PerspectiveModel& model, LogProbOracle& oracle) {
    if (model.assignment.at(k).size() != candidate.steps.size()) {
        throw ValidationError("perspective model does not match the candidate's steps");
    }
    SubsetScorer scorer(claim, candidate, oracle);
    return perspective_delta(scorer, k, m, model);
}

PerspectiveImportance perspective_importance(const std::map<std::pair<int, std::size_t>, double>& deltas, int K,
                                             int m_count) {
    if (K < 1) throw ValidationError("K must be >= 1");
    PerspectiveImportance out;
    out.k = K;
    out.phi.assign(m_count, 0.0);
    out.occurrence.assign(m_count, 0);
    for (const auto& [key, delta] : deltas) {
        const int m = key.first;
        if (m < 0 || m >= m_count) throw ValidationError("perspective id out of range");
        out.phi[m] += softplus(-delta);
        ++out.occurrence[m];
    }
    for (auto& phi : out.phi) phi = phi == 0.0 ? 0.0 : -phi / static_cast<double>(K);
    return out;
}

double mutual_score(std::size_t k, const PerspectiveModel& model, const PerspectiveImportance& importance,
                    bool count_normalized) {
    auto present = model.perspectives_of(k);
    double sum = 0.0;
    for (int m : present) sum += importance.phi.at(m);
    if (count_normalized && !present.empty()) sum /= static_cast<double>(present.size());
    return sum;
}

json to_json(const ClaimPerspectiveReport& report) {
    json assignment = json::array();
    for (std::size_t k = 0; k < report.model.assignment.size(); ++k) {
        for (std::size_t l = 0; l < report.model.assignment[k].size(); ++l) {
            assignment.push_back({{"candidate_index", report.candidate_indices[k]},
                                  {"step_index", l},
                                  {"perspective", report.model.assignment[k][l]}});
        }
    }
    json phi = json::object();
    for (std::size_t m = 0; m < report.importance.phi.size(); ++m) phi[std::to_string(m)] = report.importance.phi[m];
    json phi_m = json::object();
    for (std::size_t k = 0; k < report.phi_m.size(); ++k) phi_m[std::to_string(report.candidate_indices[k])] = report.phi_m[k];
    return json{{"claim_id", report.claim_id},
                {"M", report.model.m},
                {"seed", report.model.seed},
                {"assignment", std::move(assignment)},
                {"phi", std::move(phi)},
                {"phi_m", std::move(phi_m)}};
}

ClaimPerspectiveReport score_perspectives(const Claim& claim, const std::vector<const RationaleCandidate*>& candidates,
                                          PerspectiveModel model, LogProbOracle& oracle, bool count_normalized) {
    ClaimPerspectiveReport report;
    report.claim_id = claim.id;
    for (const auto* c : candidates) report.candidate_indices.push_back(c->candidate_index);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        SubsetScorer scorer(claim, *candidates[k], oracle);
        for (int m : model.perspectives_of(k)) {
            report.deltas[{m, k}] = perspective_delta(scorer, k, m, model);
        }
    }
    report.importance = perspective_importance(report.deltas, static_cast<int>(candidates.size()), model.m);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        report.phi_m.push_back(mutual_score(k, model, report.importance, count_normalized));
    }
    report.model = std::move(model);
    return report;
}

ClaimPerspectiveReport mutual_attribution(const Claim& claim, const std::vector<const RationaleCandidate*>& candidates,
                                          EmbeddingOracle& embedder, LogProbOracle& oracle, const MutualParams& params) {
    std::vector<std::string> texts;
    for (const auto* c : candidates) {
        if (c->steps.empty()) throw ValidationError("candidate without steps in mutual attribution");
        for (const auto& s : c->steps) texts.push_back(s.text);
    }
    if (candidates.empty()) {
        ClaimPerspectiveReport empty;
        empty.claim_id = claim.id;
        return empty;
    }
    auto flat = embedder.embed(texts);
    std::vector<std::vector<Embedding>> grouped;
    std::size_t at = 0;
    for (const auto* c : candidates) {
        grouped.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(at),
                             flat.begin() + static_cast<std::ptrdiff_t>(at + c->steps.size()));
        at += c->steps.size();
    }
    const int m = std::min(params.m, static_cast<int>(texts.size()));
    auto model = cluster_perspectives(grouped, m, params.seed, params.kmeans);
    return score_perspectives(claim, candidates, std::move(model), oracle, params.count_normalized);
}

}  // namespace curator
