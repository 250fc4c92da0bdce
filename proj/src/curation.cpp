#include "curator/curation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "curator/parallel.hpp"
#include "curator/text.hpp"

namespace curator {

using nlohmann::json;

std::string_view to_string(NormalizationMode mode) { return mode == NormalizationMode::Raw ? "raw" : "zscore"; }

std::string_view to_string(ExportMode mode) { return mode == ExportMode::Rationale ? "rationale" : "label_only"; }

NormalizationMode parse_normalization_mode(std::string_view text) {
    if (text == "raw") return NormalizationMode::Raw;
    if (text == "zscore") return NormalizationMode::ZScore;
    throw ValidationError("unknown normalization mode: " + std::string(text));
}

ExportMode parse_export_mode(std::string_view text) {
    if (text == "rationale") return ExportMode::Rationale;
    if (text == "label_only") return ExportMode::LabelOnly;
    throw ValidationError("unknown export mode: " + std::string(text));
}

json score_record_json(const CuratedRecord& r) {
    return json{{"claim_id", r.claim.id},
                {"candidate_index", r.candidate.candidate_index},
                {"generator", r.candidate.generator},
                {"phi_s", r.phi_s},
                {"phi_m", r.phi_m},
                {"combined", r.combined}};
}

// ---------------------------------------------------------------------------

double combined_score(double phi_s, double phi_m) {
    if (!std::isfinite(phi_s) || !std::isfinite(phi_m)) throw ValidationError("combined score of a non-finite value");
    return (phi_s + phi_m) / 2.0;
}

namespace {

std::vector<double> standardize(const std::vector<double>& xs) {
    std::vector<double> out(xs.size(), 0.0);
    if (xs.empty()) return out;
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    if (sd == 0.0) return out;
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - mean) / sd;
    return out;
}

}  // namespace

std::vector<double> combined_scores(const std::vector<std::pair<double, double>>& scores, NormalizationMode mode) {
    std::vector<double> s, m;
    for (const auto& [a, b] : scores) {
        if (!std::isfinite(a) || !std::isfinite(b)) throw ValidationError("combined score of a non-finite value");
        s.push_back(a);
        m.push_back(b);
    }
    if (mode == NormalizationMode::ZScore) {
        s = standardize(s);
        m = standardize(m);
    }
    std::vector<double> out;
    out.reserve(scores.size());
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back(combined_score(s[i], m[i]));
    return out;
}

std::vector<CuratedRecord> select_curated(std::vector<CuratedRecord> records, std::size_t budget,
                                          std::size_t per_claim_cap) {
    auto key = [](const CuratedRecord& r) { return std::tie(r.claim.id, r.candidate.candidate_index); };
    std::sort(records.begin(), records.end(), [&](const CuratedRecord& a, const CuratedRecord& b) {
        if (a.combined != b.combined) return a.combined > b.combined;
        return key(a) < key(b);
    });
    std::vector<CuratedRecord> out;
    std::unordered_map<std::string, std::size_t> taken;
    for (auto& r : records) {
        if (out.size() >= budget) break;
        auto& n = taken[r.claim.id];
        if (n >= per_claim_cap) continue;
        ++n;
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [&](const CuratedRecord& a, const CuratedRecord& b) { return key(a) < key(b); });
    return out;
}

std::string sft_response(const CuratedRecord& record, ExportMode mode) {
    const auto label = record.candidate.predicted_label.value_or(record.claim.label);
    if (mode == ExportMode::LabelOnly) return "This message is " + std::string(to_string(label)) + ".";
    const std::string boxed = "\\boxed{" + std::string(to_string(label)) + "}";
    const auto& raw = record.candidate.raw_text;
    if (auto span = final_answer_span(raw)) return raw.substr(0, span->start) + boxed;
    return std::string(trim(raw)) + "\n\n" + boxed;
}

void export_sft(const std::vector<CuratedRecord>& records, ExportMode mode, const std::filesystem::path& path,
                const std::string& prompt_template) {
    std::vector<json> lines;
    lines.reserve(records.size());
    for (const auto& r : records) {
        lines.push_back(json{{"prompt", render_prompt(prompt_template, r.claim.text)},
                             {"response", sft_response(r, mode)},
                             {"meta",
                              {{"claim_id", r.claim.id},
                               {"generator", r.candidate.generator},
                               {"combined", r.combined}}}});
    }
    save_jsonl(lines, path);
}

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
    if (budget < 1) throw ValidationError("budget must be >= 1");
    if (per_claim_cap < 1) throw ValidationError("per_claim_cap must be >= 1");
    if (self.kappa < 1) throw ValidationError("kappa must be >= 1");
    if (mutual.m < 1) throw ValidationError("M must be >= 1");
    if (dedup.prefix_tokens < 1) throw ValidationError("prefix_tokens must be >= 1");
    if (backend.kind != "synthetic" && backend.kind != "remote") {
        throw ValidationError("backend kind must be 'synthetic' or 'remote'");
    }
    if (claims.empty()) throw ValidationError("claims path is required");
    for (const auto& g : generation) g.validate();
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

PipelineConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
    PipelineConfig c;
    if (!doc.is_object()) throw ValidationError("config must be a JSON object");
    try {
        if (doc.contains("claims")) c.claims = resolve(base_dir, doc["claims"].get<std::string>());
        if (doc.contains("candidates") && !doc["candidates"].is_null()) {
            c.candidates = resolve(base_dir, doc["candidates"].get<std::string>());
        }
        if (doc.contains("output_dir")) c.output_dir = resolve(base_dir, doc["output_dir"].get<std::string>());
        c.dedup.prefix_tokens = doc.value("prefix_tokens", c.dedup.prefix_tokens);
        c.dedup.case_sensitive = doc.value("dedup_case_sensitive", c.dedup.case_sensitive);
        c.filter.token_limit = doc.value("token_limit", c.filter.token_limit);
        c.self.zeta = doc.value("zeta", c.self.zeta);
        c.self.kappa = doc.value("kappa", c.self.kappa);
        c.self.epsilon = doc.value("epsilon", c.self.epsilon);
        c.self.clamp_sufficiency = doc.value("clamp_sufficiency", c.self.clamp_sufficiency);
        c.mutual.m = doc.value("M", c.mutual.m);
        c.mutual.seed = doc.value("seed", c.mutual.seed);
        c.mutual.count_normalized = doc.value("count_normalized", c.mutual.count_normalized);
        c.global_clustering = doc.value("global_clustering", c.global_clustering);
        c.budget = doc.value("budget", c.budget);
        c.per_claim_cap = doc.value("per_claim_cap", c.per_claim_cap);
        c.normalization = parse_normalization_mode(doc.value("normalization_mode", std::string("raw")));
        c.export_mode = parse_export_mode(doc.value("export_mode", std::string("rationale")));
        c.prompt_template = doc.value("prompt_template", c.prompt_template);
        c.max_in_flight = doc.value("max_in_flight", c.max_in_flight);

        if (auto it = doc.find("backend"); it != doc.end()) {
            const auto& b = *it;
            auto& s = c.backend;
            s.kind = b.value("kind", s.kind);
            if (b.contains("weights")) s.weights = resolve(base_dir, b["weights"].get<std::string>());
            s.embedding_dim = b.value("embedding_dim", s.embedding_dim);
            s.scoring_model = b.value("scoring_model", s.scoring_model);
            s.embedding_model = b.value("embedding_model", s.embedding_model);
            s.judge_model = b.value("judge_model", s.judge_model);
            s.remote.base_url = b.value("base_url", s.remote.base_url);
            s.remote.api_key_env = b.value("api_key_env", s.remote.api_key_env);
            s.remote.retry_budget = b.value("retry_budget", s.remote.retry_budget);
            s.remote.max_in_flight = b.value("max_in_flight", s.remote.max_in_flight);
            s.remote.timeout_seconds = b.value("timeout_seconds", s.remote.timeout_seconds);
            s.remote.backoff_ms = b.value("backoff_ms", s.remote.backoff_ms);
        }
        if (auto it = doc.find("generation"); it != doc.end()) {
            for (const auto& g : *it) {
                GenerationConfig gc;
                gc.model = g.value("model", std::string{});
                gc.temperature = g.value("temperature", gc.temperature);
                gc.max_tokens = g.value("max_tokens", gc.max_tokens);
                gc.prompt_template = g.value("prompt_template", gc.prompt_template);
                gc.candidates_per_model = g.value("candidates_per_model", gc.candidates_per_model);
                c.generation.push_back(std::move(gc));
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid config: ") + e.what());
    }
    return c;
}

json to_json(const PipelineConfig& c) {
    json generation = json::array();
    for (const auto& g : c.generation) {
        generation.push_back({{"model", g.model},
                              {"temperature", g.temperature},
                              {"max_tokens", g.max_tokens},
                              {"prompt_template", g.prompt_template},
                              {"candidates_per_model", g.candidates_per_model}});
    }
    return json{{"claims", c.claims.generic_string()},
                {"candidates", c.candidates ? json(c.candidates->generic_string()) : json(nullptr)},
                {"output_dir", c.output_dir.generic_string()},
                {"prefix_tokens", c.dedup.prefix_tokens},
                {"dedup_case_sensitive", c.dedup.case_sensitive},
                {"token_limit", c.filter.token_limit},
                {"zeta", c.self.zeta},
                {"kappa", c.self.kappa},
                {"epsilon", c.self.epsilon},
                {"clamp_sufficiency", c.self.clamp_sufficiency},
                {"M", c.mutual.m},
                {"seed", c.mutual.seed},
                {"count_normalized", c.mutual.count_normalized},
                {"global_clustering", c.global_clustering},
                {"budget", c.budget},
                {"per_claim_cap", c.per_claim_cap},
                {"normalization_mode", to_string(c.normalization)},
                {"export_mode", to_string(c.export_mode)},
                {"prompt_template", c.prompt_template},
                {"max_in_flight", c.max_in_flight},
                {"backend",
                 {{"kind", c.backend.kind},
                  {"weights", c.backend.weights.generic_string()},
                  {"embedding_dim", c.backend.embedding_dim},
                  {"scoring_model", c.backend.scoring_model},
                  {"embedding_model", c.backend.embedding_model},
                  {"judge_model", c.backend.judge_model},
                  {"base_url", c.backend.remote.base_url},
                  {"api_key_env", c.backend.remote.api_key_env},
                  {"retry_budget", c.backend.remote.retry_budget},
                  {"max_in_flight", c.backend.remote.max_in_flight},
                  {"timeout_seconds", c.backend.remote.timeout_seconds},
                  {"backoff_ms", c.backend.remote.backoff_ms}}},
                {"generation", std::move(generation)}};
}

Backends make_backends(const BackendSettings& settings) {
    Backends b;
    if (settings.kind == "synthetic") {
        json doc = json::object();
        if (!settings.weights.empty()) {
            std::ifstream in(settings.weights);
            if (!in) throw IoError("cannot read synthetic weights " + settings.weights.string());
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                throw IoError("malformed synthetic weights " + settings.weights.string() + ": " + e.what());
            }
        }
        b.scorer = std::make_shared<SyntheticLogisticOracle>(SyntheticLogisticOracle::from_json(doc));
        b.embedder = std::make_shared<HashingEmbedder>(settings.embedding_dim);
        return b;
    }
    auto client = std::make_shared<const RemoteClient>(settings.remote);
    b.scorer = std::make_shared<RemoteLogProbOracle>(client, settings.scoring_model);
    if (settings.embedding_model.empty()) b.embedder = std::make_shared<HashingEmbedder>(settings.embedding_dim);
    else b.embedder = std::make_shared<RemoteEmbedder>(client, settings.embedding_model);
    b.chat = std::make_shared<RemoteChatClient>(client);
    return b;
}

// ---------------------------------------------------------------------------
// Stages

json to_json(const FilterRecord& r) {
    json j{{"claim_id", r.claim_id},
           {"candidate_index", r.candidate_index},
           {"keep", r.verdict.keep},
           {"reason", to_string(r.verdict.reason)}};
    if (!r.verdict.detail.empty()) j["detail"] = r.verdict.detail;
    return j;
}

namespace {

std::unordered_map<std::string, std::size_t> claim_positions(const ClaimCorpus& corpus) {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < corpus.claims.size(); ++i) pos.emplace(corpus.claims[i].id, i);
    return pos;
}

using CandidateKey = std::pair<std::string, int>;

struct KeyHash {
    std::size_t operator()(const CandidateKey& k) const {
        return std::hash<std::string>{}(k.first) * 31 + std::hash<int>{}(k.second);
    }
};

}  // namespace

FilterStage filter_stage(const ClaimCorpus& corpus, std::vector<RationaleCandidate> candidates,
                         const FilterOptions& options) {
    auto pos = claim_positions(corpus);
    FilterStage out;
    std::vector<std::pair<std::size_t, RationaleCandidate>> owned;
    for (auto& c : candidates) {
        auto it = pos.find(c.claim_id);
        if (it == pos.end()) {
            ++out.orphaned;
            continue;
        }
        owned.emplace_back(it->second, std::move(c));
    }
    std::stable_sort(owned.begin(), owned.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first, a.second.candidate_index) < std::tie(b.first, b.second.candidate_index);
    });
    for (std::size_t i = 1; i < owned.size(); ++i) {
        if (owned[i].first == owned[i - 1].first &&
            owned[i].second.candidate_index == owned[i - 1].second.candidate_index) {
            throw ValidationError("duplicate candidate " + owned[i].second.claim_id + "#" +
                                  std::to_string(owned[i].second.candidate_index));
        }
    }
    for (auto& [p, c] : owned) {
        auto verdict = apply_heuristic_filters(c, corpus.claims[p], options);
        out.report.push_back({c.claim_id, c.candidate_index, verdict});
        if (verdict.keep) out.kept.push_back(std::move(c));
    }
    return out;
}

std::vector<AttributionProfile> attribution_stage(const ClaimCorpus& corpus,
                                                  const std::vector<RationaleCandidate>& candidates,
                                                  LogProbOracle& oracle, const SelfAttributionParams& params,
                                                  std::size_t max_in_flight) {
    auto pos = claim_positions(corpus);
    std::vector<std::optional<AttributionProfile>> slots(candidates.size());
    parallel_for(candidates.size(), max_in_flight, [&](std::size_t i) {
        const auto& c = candidates[i];
        if (c.steps.empty() || !c.predicted_label) return;
        auto it = pos.find(c.claim_id);
        if (it == pos.end()) throw ValidationError("candidate refers to unknown claim " + c.claim_id);
        slots[i] = attribute_candidate(corpus.claims[it->second], c, oracle, params);
    });
    std::vector<AttributionProfile> out;
    for (auto& s : slots) {
        if (s) out.push_back(std::move(*s));
    }
    return out;
}

std::vector<ClaimPerspectiveReport> clustering_stage(const ClaimCorpus& corpus,
                                                     const std::vector<RationaleCandidate>& candidates,
                                                     EmbeddingOracle& embedder, LogProbOracle& oracle,
                                                     const MutualParams& params, bool global,
                                                     std::size_t max_in_flight) {
    auto pos = claim_positions(corpus);
    std::vector<std::vector<const RationaleCandidate*>> groups(corpus.claims.size());
    for (const auto& c : candidates) {
        if (c.steps.empty() || !c.predicted_label) continue;
        auto it = pos.find(c.claim_id);
        if (it == pos.end()) throw ValidationError("candidate refers to unknown claim " + c.claim_id);
        groups[it->second].push_back(&c);
    }
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (!groups[i].empty()) active.push_back(i);
    }

    std::vector<ClaimPerspectiveReport> reports(active.size());
    if (!global) {
        parallel_for(active.size(), max_in_flight, [&](std::size_t a) {
            const auto i = active[a];
            reports[a] = mutual_attribution(corpus.claims[i], groups[i], embedder, oracle, params);
        });
        return reports;
    }

    // Corpus-wide clustering, then per-claim scoring on slices of the model.
    std::vector<std::vector<Embedding>> per_candidate;
    std::vector<std::string> texts;
    for (auto i : active) {
        for (const auto* c : groups[i]) {
            for (const auto& s : c->steps) texts.push_back(s.text);
        }
    }
    if (active.empty()) return reports;
    auto flat = embedder.embed(texts);
    std::size_t at = 0;
    for (auto i : active) {
        for (const auto* c : groups[i]) {
            per_candidate.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(at),
                                       flat.begin() + static_cast<std::ptrdiff_t>(at + c->steps.size()));
            at += c->steps.size();
        }
    }
    const int m = std::min(params.m, static_cast<int>(texts.size()));
    auto model = cluster_perspectives(per_candidate, m, params.seed, params.kmeans);
    std::size_t offset = 0;
    std::vector<PerspectiveModel> slices;
    for (auto i : active) {
        PerspectiveModel slice;
        slice.m = model.m;
        slice.seed = model.seed;
        slice.iterations = model.iterations;
        slice.centroids = model.centroids;
        for (std::size_t k = 0; k < groups[i].size(); ++k) slice.assignment.push_back(model.assignment[offset + k]);
        offset += groups[i].size();
        slices.push_back(std::move(slice));
    }
    parallel_for(active.size(), max_in_flight, [&](std::size_t a) {
        reports[a] = score_perspectives(corpus.claims[active[a]], groups[active[a]], std::move(slices[a]), oracle,
                                        params.count_normalized);
    });
    return reports;
}

std::vector<CuratedRecord> combine_stage(const ClaimCorpus& corpus, const std::vector<RationaleCandidate>& candidates,
                                         const std::vector<AttributionProfile>& profiles,
                                         const std::vector<ClaimPerspectiveReport>& reports, NormalizationMode mode) {
    auto pos = claim_positions(corpus);
    std::unordered_map<CandidateKey, const AttributionProfile*, KeyHash> by_key;
    for (const auto& p : profiles) by_key[{p.claim_id, p.candidate_index}] = &p;
    std::unordered_map<CandidateKey, double, KeyHash> phi_m;
    for (const auto& r : reports) {
        for (std::size_t k = 0; k < r.phi_m.size(); ++k) phi_m[{r.claim_id, r.candidate_indices[k]}] = r.phi_m[k];
    }
    std::vector<CuratedRecord> records;
    std::vector<std::pair<double, double>> pairs;
    for (const auto& c : candidates) {
        CandidateKey key{c.claim_id, c.candidate_index};
        auto p = by_key.find(key);
        auto m = phi_m.find(key);
        if (p == by_key.end() || m == phi_m.end()) continue;
        CuratedRecord r;
        r.claim = corpus.claims.at(pos.at(c.claim_id));
        r.candidate = c;
        r.phi_s = p->second->phi_s;
        r.phi_m = m->second;
        pairs.emplace_back(r.phi_s, r.phi_m);
        records.push_back(std::move(r));
    }
    auto combined = combined_scores(pairs, mode);
    for (std::size_t i = 0; i < records.size(); ++i) records[i].combined = combined[i];
    return records;
}

// ---------------------------------------------------------------------------

json PipelineSummary::to_json() const {
    return json{{"claims_loaded", claims_loaded},
                {"claims_rejected", claims_rejected},
                {"claims_after_dedup", claims_after_dedup},
                {"candidates", candidates},
                {"generation_failures", generation_failures},
                {"orphaned_candidates", orphaned_candidates},
                {"post_heuristic", post_heuristic},
                {"attributed", attributed},
                {"selected", selected},
                {"filter_reasons", filter_reasons}};
}

namespace {

template <class Fn>
auto run_stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

void write_summary(const std::filesystem::path& dir, const PipelineSummary& summary, const PipelineConfig& config,
                   const std::string& failed_stage) {
    // The output location is left out so runs into different directories compare equal.
    auto echoed = to_json(config);
    echoed.erase("output_dir");
    json doc{{"counts", summary.to_json()}, {"config", std::move(echoed)}};
    if (!failed_stage.empty()) doc["failed_stage"] = failed_stage;
    write_file_atomic(dir / "summary.json", doc.dump(2) + "\n");
}

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& config) {
    config.validate();
    auto backends = run_stage("backend", [&] { return make_backends(config.backend); });
    return run_pipeline(config, backends);
}

PipelineSummary run_pipeline(const PipelineConfig& config, Backends& backends) {
    config.validate();
    const auto& dir = config.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StageError("load", "cannot create output directory " + dir.string() + ": " + ec.message());

    PipelineSummary summary;
    try {
        auto loaded = run_stage("load", [&] {
            auto l = load_claims(config.claims);
            save_records(l.rejects, dir / "rejects.jsonl");
            return l;
        });
        summary.claims_loaded = loaded.corpus.claims.size();
        summary.claims_rejected = loaded.rejects.size();

        auto corpus = run_stage("dedup", [&] {
            auto c = dedup_claims(loaded.corpus, config.dedup);
            save_records(c, dir / "claims.jsonl");
            return c;
        });
        summary.claims_after_dedup = corpus.claims.size();

        auto candidates = run_stage(config.candidates ? "load" : "generate", [&] {
            std::vector<RationaleCandidate> out;
            if (config.candidates) {
                out = load_candidates(*config.candidates).candidates;
            } else {
                if (!backends.chat) throw ValidationError("generation requires the remote backend");
                if (config.generation.empty()) throw ValidationError("no generation models configured");
                auto outcomes = generate_batch(corpus.claims, config.generation, *backends.chat, config.max_in_flight);
                std::vector<json> errors;
                for (auto& o : outcomes) {
                    for (auto& e : o.errors) errors.push_back(json{{"error", e}});
                    for (auto& c : o.candidates) out.push_back(std::move(c));
                }
                summary.generation_failures = errors.size();
                save_jsonl(errors, dir / "generation_errors.jsonl");
            }
            save_records(out, dir / "candidates.jsonl");
            return out;
        });
        summary.candidates = candidates.size();

        auto filtered = run_stage("filter", [&] {
            auto f = filter_stage(corpus, std::move(candidates), config.filter);
            std::vector<json> report;
            for (const auto& r : f.report) report.push_back(to_json(r));
            save_jsonl(report, dir / "filter_report.jsonl");
            return f;
        });
        summary.orphaned_candidates = filtered.orphaned;
        summary.post_heuristic = filtered.kept.size();
        for (const auto& r : filtered.report) ++summary.filter_reasons[std::string(to_string(r.verdict.reason))];

        auto profiles = run_stage("self_attribution", [&] {
            auto p = attribution_stage(corpus, filtered.kept, *backends.scorer, config.self, config.max_in_flight);
            std::vector<json> lines;
            for (const auto& x : p) lines.push_back(to_json(x));
            save_jsonl(lines, dir / "attribution.jsonl");
            return p;
        });
        summary.attributed = profiles.size();

        auto reports = run_stage("mutual_attribution", [&] {
            auto r = clustering_stage(corpus, filtered.kept, *backends.embedder, *backends.scorer, config.mutual,
                                      config.global_clustering, config.max_in_flight);
            std::vector<json> lines;
            for (const auto& x : r) lines.push_back(to_json(x));
            save_jsonl(lines, dir / "perspectives.jsonl");
            return r;
        });

        auto records = run_stage("combine", [&] {
            auto r = combine_stage(corpus, filtered.kept, profiles, reports, config.normalization);
            std::vector<json> lines;
            for (const auto& x : r) lines.push_back(score_record_json(x));
            save_jsonl(lines, dir / "scores.jsonl");
            return r;
        });

        auto selected = run_stage("select", [&] {
            auto s = select_curated(std::move(records), config.budget, config.per_claim_cap);
            std::vector<json> lines;
            for (const auto& x : s) lines.push_back(score_record_json(x));
            save_jsonl(lines, dir / "curated.jsonl");
            return s;
        });
        summary.selected = selected.size();

        run_stage("export", [&] {
            export_sft(selected, config.export_mode, dir / "sft.jsonl", config.prompt_template);
            return 0;
        });
    } catch (const StageError& e) {
        write_summary(dir, summary, config, e.stage());
        throw;
    }
    write_summary(dir, summary, config, "");
    return summary;
}

}  // namespace curator
