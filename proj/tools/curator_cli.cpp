// rcurate: command-line front end of the rationale curation pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "curator/analytics.hpp"
#include "curator/curation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace curator;

namespace {

// Flags that mirror PipelineConfig keys. Unset flags leave the config file value.
struct Overrides {
    std::string config_path;
    std::optional<std::string> claims, candidates, output_dir;
    std::optional<std::size_t> prefix_tokens;
    bool dedup_case_insensitive = false;
    std::optional<std::int64_t> token_limit;
    std::optional<double> zeta, epsilon;
    std::optional<int> kappa, m;
    bool clamp_sufficiency = false;
    std::optional<std::uint64_t> seed;
    bool count_normalized = false;
    bool global_clustering = false;
    std::optional<std::size_t> budget, per_claim_cap, max_in_flight;
    std::optional<std::string> normalization_mode, export_mode, prompt_template;

    std::optional<std::string> backend, weights, base_url, api_key_env, scoring_model, embedding_model, judge_model;
    std::optional<int> retry_budget, timeout_seconds;
    std::optional<std::size_t> embedding_dim;

    std::vector<std::string> generator_models;
    std::optional<double> temperature;
    std::optional<std::int64_t> max_tokens;
    std::optional<int> candidates_per_model;

    // Stage inputs used by the single-stage subcommands.
    std::optional<std::string> attribution, perspectives, curated;
    bool judge = false;
};

void add_config_flags(CLI::App& app, Overrides& o) {
    app.add_option("-c,--config", o.config_path, "JSON config document");
    app.add_option("--claims", o.claims, "claims JSONL");
    app.add_option("--candidates", o.candidates, "rationale candidates JSONL (omit to generate)");
    app.add_option("-o,--output-dir", o.output_dir, "directory for reports and exports");
    app.add_option("--prefix-tokens", o.prefix_tokens, "dedup prefix length in whitespace tokens");
    app.add_flag("--dedup-case-insensitive", o.dedup_case_insensitive, "lowercase before comparing prefixes");
    app.add_option("--token-limit", o.token_limit, "length filter limit");
    app.add_option("--zeta", o.zeta, "unnecessary-step threshold");
    app.add_option("--kappa", o.kappa, "top steps used for sufficiency");
    app.add_option("--epsilon", o.epsilon, "minimal-sufficiency tolerance");
    app.add_flag("--clamp-sufficiency", o.clamp_sufficiency, "clamp s_suf to [0,1]");
    app.add_option("-M,--perspectives-per-claim", o.m, "number of verification perspectives");
    app.add_option("--seed", o.seed, "clustering seed");
    app.add_flag("--count-normalized", o.count_normalized, "divide phi_m by the perspective count");
    app.add_flag("--global-clustering", o.global_clustering, "cluster steps of all claims together");
    app.add_option("--budget", o.budget, "number of records to select");
    app.add_option("--per-claim-cap", o.per_claim_cap, "records kept per claim");
    app.add_option("--normalization-mode", o.normalization_mode, "raw | zscore")
        ->check(CLI::IsMember({"raw", "zscore"}));
    app.add_option("--export-mode", o.export_mode, "rationale | label_only")
        ->check(CLI::IsMember({"rationale", "label_only"}));
    app.add_option("--prompt-template", o.prompt_template, "instruction template id");
    app.add_option("--max-in-flight", o.max_in_flight, "concurrent claims or requests");

    app.add_option("--backend", o.backend, "synthetic | remote")->check(CLI::IsMember({"synthetic", "remote"}));
    app.add_option("--weights", o.weights, "synthetic oracle weights JSON");
    app.add_option("--embedding-dim", o.embedding_dim, "hashed embedder dimension");
    app.add_option("--base-url", o.base_url, "OpenAI-compatible server root");
    app.add_option("--api-key-env", o.api_key_env, "environment variable holding the API key");
    app.add_option("--retry-budget", o.retry_budget, "retries after the first attempt");
    app.add_option("--timeout-seconds", o.timeout_seconds, "per-request timeout");
    app.add_option("--scoring-model", o.scoring_model, "model used for log-probability scoring");
    app.add_option("--embedding-model", o.embedding_model, "remote embedding model (default: hashed)");
    app.add_option("--judge-model", o.judge_model, "model used for rubric judging");

    app.add_option("--generator-model", o.generator_models, "generation model; repeat for several");
    app.add_option("--temperature", o.temperature, "generation temperature");
    app.add_option("--max-tokens", o.max_tokens, "generation token cap");
    app.add_option("--candidates-per-model", o.candidates_per_model, "completions per claim and model");

    app.add_option("--attribution", o.attribution, "attribution JSONL from `attribute`");
    app.add_option("--perspectives", o.perspectives, "perspective JSONL from `cluster`");
    app.add_option("--curated", o.curated, "curated JSONL from `curate`");
    app.add_flag("--judge", o.judge, "score rationales with the judge model during `evaluate`");
}

std::string absolute(const std::string& p) { return fs::absolute(p).generic_string(); }

PipelineConfig resolve_config(const Overrides& o) {
    json doc = json::object();
    fs::path base;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw IoError("cannot read config " + o.config_path);
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ValidationError("malformed config " + o.config_path + ": " + e.what());
        }
        base = fs::absolute(o.config_path).parent_path();
    }
    auto set = [&](const char* key, const auto& value) {
        if (value) doc[key] = *value;
    };
    if (o.claims) doc["claims"] = absolute(*o.claims);
    if (o.candidates) doc["candidates"] = absolute(*o.candidates);
    if (o.output_dir) doc["output_dir"] = absolute(*o.output_dir);
    set("prefix_tokens", o.prefix_tokens);
    if (o.dedup_case_insensitive) doc["dedup_case_sensitive"] = false;
    set("token_limit", o.token_limit);
    set("zeta", o.zeta);
    set("kappa", o.kappa);
    set("epsilon", o.epsilon);
    if (o.clamp_sufficiency) doc["clamp_sufficiency"] = true;
    set("M", o.m);
    set("seed", o.seed);
    if (o.count_normalized) doc["count_normalized"] = true;
    if (o.global_clustering) doc["global_clustering"] = true;
    set("budget", o.budget);
    set("per_claim_cap", o.per_claim_cap);
    set("normalization_mode", o.normalization_mode);
    set("export_mode", o.export_mode);
    set("prompt_template", o.prompt_template);
    set("max_in_flight", o.max_in_flight);

    if (!doc.contains("backend")) doc["backend"] = json::object();
    auto& b = doc["backend"];
    auto bset = [&](const char* key, const auto& value) {
        if (value) b[key] = *value;
    };
    bset("kind", o.backend);
    if (o.weights) b["weights"] = absolute(*o.weights);
    bset("embedding_dim", o.embedding_dim);
    bset("base_url", o.base_url);
    bset("api_key_env", o.api_key_env);
    bset("retry_budget", o.retry_budget);
    bset("timeout_seconds", o.timeout_seconds);
    bset("scoring_model", o.scoring_model);
    bset("embedding_model", o.embedding_model);
    bset("judge_model", o.judge_model);

    if (!o.generator_models.empty()) {
        json gens = json::array();
        for (const auto& model : o.generator_models) gens.push_back({{"model", model}});
        doc["generation"] = std::move(gens);
    }
    if (auto it = doc.find("generation"); it != doc.end()) {
        for (auto& g : *it) {
            if (o.temperature) g["temperature"] = *o.temperature;
            if (o.max_tokens) g["max_tokens"] = *o.max_tokens;
            if (o.candidates_per_model) g["candidates_per_model"] = *o.candidates_per_model;
        }
    }
    return config_from_json(doc, base);
}

template <class Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

const fs::path& require(const std::optional<fs::path>& p, const char* what) {
    if (!p) throw ValidationError(std::string(what) + " path is required");
    return *p;
}

fs::path require(const std::optional<std::string>& p, const char* what) {
    if (!p) throw ValidationError(std::string("--") + what + " is required");
    return *p;
}

fs::path prepare_output(const PipelineConfig& config) {
    fs::create_directories(config.output_dir);
    return config.output_dir;
}

ClaimCorpus load_corpus(const PipelineConfig& config) {
    return stage("load", [&] { return load_claims(config.claims).corpus; });
}

std::vector<RationaleCandidate> load_candidate_file(const fs::path& path) {
    return stage("load", [&] { return load_candidates(path).candidates; });
}

template <class T, class F>
void write_lines(const std::vector<T>& items, F&& to_line, const fs::path& path) {
    std::vector<json> lines;
    lines.reserve(items.size());
    for (const auto& x : items) lines.push_back(to_line(x));
    save_jsonl(lines, path);
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------
// Subcommands

void cmd_ingest(const PipelineConfig& config) {
    auto dir = prepare_output(config);
    auto loaded = stage("load", [&] {
        auto l = load_claims(config.claims);
        save_records(l.rejects, dir / "rejects.jsonl");
        return l;
    });
    auto corpus = stage("dedup", [&] {
        auto c = dedup_claims(loaded.corpus, config.dedup);
        save_records(c, dir / "claims.jsonl");
        return c;
    });
    print_json({{"claims_loaded", loaded.corpus.claims.size()},
                {"claims_rejected", loaded.rejects.size()},
                {"claims_after_dedup", corpus.claims.size()}});
}

void cmd_generate(const PipelineConfig& config) {
    auto dir = prepare_output(config);
    auto corpus = load_corpus(config);
    auto backends = stage("backend", [&] { return make_backends(config.backend); });
    auto outcomes = stage("generate", [&] {
        if (!backends.chat) throw ValidationError("generation requires the remote backend");
        if (config.generation.empty()) throw ValidationError("no generation models configured");
        return generate_batch(corpus.claims, config.generation, *backends.chat, config.max_in_flight);
    });
    std::vector<RationaleCandidate> candidates;
    std::vector<json> errors;
    for (auto& o : outcomes) {
        for (auto& e : o.errors) errors.push_back({{"error", e}});
        for (auto& c : o.candidates) candidates.push_back(std::move(c));
    }
    stage("generate", [&] {
        save_records(candidates, dir / "candidates.jsonl");
        save_jsonl(errors, dir / "generation_errors.jsonl");
        return 0;
    });
    print_json({{"candidates", candidates.size()}, {"generation_failures", errors.size()}});
}

void cmd_filter(const PipelineConfig& config) {
    auto dir = prepare_output(config);
    auto corpus = load_corpus(config);
    auto candidates = load_candidate_file(require(config.candidates, "candidates"));
    const auto total = candidates.size();
    auto result = stage("filter", [&] {
        auto f = filter_stage(corpus, std::move(candidates), config.filter);
        write_lines(f.report, [](const FilterRecord& r) { return to_json(r); }, dir / "filter_report.jsonl");
        save_records(f.kept, dir / "filtered.jsonl");
        return f;
    });
    std::map<std::string, std::size_t> reasons;
    for (const auto& r : result.report) ++reasons[std::string(to_string(r.verdict.reason))];
    print_json({{"candidates", total},
                {"orphaned_candidates", result.orphaned},
                {"post_heuristic", result.kept.size()},
                {"filter_reasons", reasons}});
}

void cmd_attribute(const PipelineConfig& config) {
    auto dir = prepare_output(config);
    auto corpus = load_corpus(config);
    auto candidates = load_candidate_file(require(config.candidates, "candidates"));
    auto backends = stage("backend", [&] { return make_backends(config.backend); });
    auto profiles = stage("self_attribution", [&] {
        auto p = attribution_stage(corpus, candidates, *backends.scorer, config.self, config.max_in_flight);
        write_lines(p, [](const AttributionProfile& x) { return to_json(x); }, dir / "attribution.jsonl");
        return p;
    });
    print_json({{"attributed", profiles.size()}});
}

void cmd_cluster(const PipelineConfig& config) {
    auto dir = prepare_output(config);
    auto corpus = load_corpus(config);
    auto candidates = load_candidate_file(require(config.candidates, "candidates"));
    auto backends = stage("backend", [&] { return make_backends(config.backend); });
    auto reports = stage("mutual_attribution", [&] {
        auto r = clustering_stage(corpus, candidates, *backends.embedder, *backends.scorer, config.mutual,
                                  config.global_clustering, config.max_in_flight);
        write_lines(r, [](const ClaimPerspectiveReport& x) { return to_json(x); }, dir / "perspectives.jsonl");
        return r;
    });
    print_json({{"claims_clustered", reports.size()}});
}

std::vector<ClaimPerspectiveReport> read_perspectives(const fs::path& path) {
    std::vector<ClaimPerspectiveReport> out;
    for (const auto& [line, record] : read_jsonl(path)) {
        ClaimPerspectiveReport r;
        try {
            r.claim_id = record.at("claim_id").get<std::string>();
            for (const auto& [index, value] : record.at("phi_m").items()) {
                r.candidate_indices.push_back(std::stoi(index));
                r.phi_m.push_back(value.get<double>());
            }
        } catch (const std::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

void cmd_curate(const PipelineConfig& config, const Overrides& o) {
    auto dir = prepare_output(config);
    auto corpus = load_corpus(config);
    auto candidates = load_candidate_file(require(config.candidates, "candidates"));
    auto profiles = stage("load", [&] {
        std::vector<AttributionProfile> p;
        for (const auto& [line, record] : read_jsonl(require(o.attribution, "attribution"))) {
            p.push_back(profile_from_json(record));
        }
        return p;
    });
    auto reports = stage("load", [&] { return read_perspectives(require(o.perspectives, "perspectives")); });
    auto records = stage("combine", [&] {
        auto r = combine_stage(corpus, candidates, profiles, reports, config.normalization);
        write_lines(r, score_record_json, dir / "scores.jsonl");
        return r;
    });
    const auto scored = records.size();
    auto selected = stage("select", [&] {
        auto s = select_curated(std::move(records), config.budget, config.per_claim_cap);
        write_lines(s, score_record_json, dir / "curated.jsonl");
        return s;
    });
    print_json({{"scored", scored}, {"selected", selected.size()}});
}

void cmd_export(const PipelineConfig& config, const Overrides& o) {
    auto dir = prepare_output(config);
    auto corpus = load_corpus(config);
    auto candidates = load_candidate_file(require(config.candidates, "candidates"));
    auto records = stage("load", [&] {
        std::map<std::string, const Claim*> claims;
        for (const auto& c : corpus.claims) claims[c.id] = &c;
        std::map<std::pair<std::string, int>, const RationaleCandidate*> by_key;
        for (const auto& c : candidates) by_key[{c.claim_id, c.candidate_index}] = &c;
        std::vector<CuratedRecord> out;
        for (const auto& [line, record] : read_jsonl(require(o.curated, "curated"))) {
            auto id = record.at("claim_id").get<std::string>();
            auto index = record.at("candidate_index").get<int>();
            auto claim = claims.find(id);
            auto cand = by_key.find({id, index});
            if (claim == claims.end() || cand == by_key.end()) {
                throw ValidationError("curated line " + std::to_string(line) + " refers to unknown " + id + "#" +
                                      std::to_string(index));
            }
            out.push_back({*claim->second, *cand->second, record.value("phi_s", 0.0), record.value("phi_m", 0.0),
                           record.at("combined").get<double>()});
        }
        return out;
    });
    stage("export", [&] {
        export_sft(records, config.export_mode, dir / "sft.jsonl", config.prompt_template);
        return 0;
    });
    print_json({{"exported", records.size()}});
}

// Correctness of each profile's candidate against its claim.
std::vector<bool> profile_correctness(const ClaimCorpus& corpus, const std::vector<RationaleCandidate>& candidates,
                                      const std::vector<AttributionProfile>& profiles) {
    std::map<std::string, Label> gold;
    for (const auto& c : corpus.claims) gold[c.id] = c.label;
    std::map<std::pair<std::string, int>, std::optional<Label>> predicted;
    for (const auto& c : candidates) predicted[{c.claim_id, c.candidate_index}] = c.predicted_label;
    std::vector<bool> out;
    for (const auto& p : profiles) {
        auto g = gold.find(p.claim_id);
        auto pr = predicted.find({p.claim_id, p.candidate_index});
        out.push_back(g != gold.end() && pr != predicted.end() && pr->second == g->second);
    }
    return out;
}

void cmd_diagnose(const PipelineConfig& config, const Overrides& o) {
    auto dir = prepare_output(config);
    auto corpus = load_corpus(config);
    auto candidates = load_candidate_file(require(config.candidates, "candidates"));
    std::vector<AttributionProfile> profiles;
    if (o.attribution) {
        profiles = stage("load", [&] {
            std::vector<AttributionProfile> p;
            for (const auto& [line, record] : read_jsonl(*o.attribution)) p.push_back(profile_from_json(record));
            return p;
        });
    } else {
        auto backends = stage("backend", [&] { return make_backends(config.backend); });
        // Unparsed candidates have no label to score.
        std::vector<RationaleCandidate> scorable;
        for (const auto& c : candidates) {
            if (c.predicted_label && !c.steps.empty()) scorable.push_back(c);
        }
        profiles = stage("self_attribution", [&] {
            return attribution_stage(corpus, scorable, *backends.scorer, config.self, config.max_in_flight);
        });
    }
    stage("diagnose", [&] {
        auto correct = profile_correctness(corpus, candidates, profiles);
        auto deltas = delta_distribution(profiles, correct, uniform_edges(-2.0, 2.0, 40));
        auto kappa = kappa_histogram(profiles);
        auto steps = step_count_histogram(candidates);
        auto ratios = unnecessary_ratio_histogram(profiles);
        write_file_atomic(dir / "delta_correct.csv", deltas.correct.to_csv());
        write_file_atomic(dir / "delta_incorrect.csv", deltas.incorrect.to_csv());
        write_file_atomic(dir / "kappa.csv", kappa.to_csv());
        write_file_atomic(dir / "step_counts.csv", steps.to_csv());
        write_file_atomic(dir / "unnecessary_ratio.csv", ratios.to_csv());
        json summary{{"profiles", profiles.size()},
                     {"candidates", candidates.size()},
                     {"negative_fraction_correct", deltas.negative_fraction_correct},
                     {"negative_fraction_incorrect", deltas.negative_fraction_incorrect},
                     {"delta_correct", to_json(deltas.correct)},
                     {"delta_incorrect", to_json(deltas.incorrect)},
                     {"kappa", to_json(kappa)},
                     {"step_counts", to_json(steps)},
                     {"unnecessary_ratio", to_json(ratios)}};
        write_file_atomic(dir / "diagnose.json", summary.dump(2) + "\n");
        print_json({{"profiles", profiles.size()},
                    {"negative_fraction_correct", deltas.negative_fraction_correct},
                    {"negative_fraction_incorrect", deltas.negative_fraction_incorrect}});
        return 0;
    });
}

void cmd_evaluate(const PipelineConfig& config, const Overrides& o) {
    auto dir = prepare_output(config);
    auto corpus = load_corpus(config);
    auto candidates = load_candidate_file(require(config.candidates, "candidates"));
    std::map<std::string, const Claim*> claims;
    for (const auto& c : corpus.claims) claims[c.id] = &c;

    json report = stage("evaluate", [&] {
        std::vector<std::pair<Label, std::optional<Label>>> pairs;
        for (const auto& c : candidates) {
            auto it = claims.find(c.claim_id);
            if (it != claims.end()) pairs.emplace_back(it->second->label, c.predicted_label);
        }
        json r{{"detection", to_json(detection_metrics(pairs))}, {"token_consumption", token_consumption(candidates)}};
        return r;
    });
    if (o.judge) {
        auto backends = stage("backend", [&] { return make_backends(config.backend); });
        report["judge"] = stage("judge", [&] {
            if (!backends.chat) throw ValidationError("judging requires the remote backend");
            if (config.backend.judge_model.empty()) throw ValidationError("judge_model is not configured");
            std::vector<JudgeItem> items;
            for (const auto& c : candidates) {
                auto it = claims.find(c.claim_id);
                if (it != claims.end()) items.push_back({it->second->text, it->second->label, c.raw_text});
            }
            return to_json(judge_scores(items, *backends.chat, config.backend.judge_model, config.max_in_flight));
        });
    }
    stage("evaluate", [&] {
        write_file_atomic(dir / "evaluation.json", report.dump(2) + "\n");
        return 0;
    });
    print_json(report["detection"]);
}

void cmd_run(const PipelineConfig& config) { print_json(run_pipeline(config).to_json()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rationale curation: score, filter and export misinformation-detection rationales."};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    add_config_flags(app, o);

    const std::vector<std::pair<const char*, const char*>> commands = {
        {"ingest", "load, validate and deduplicate claims"},
        {"generate", "request rationales from the configured generators"},
        {"filter", "apply the heuristic discard rules"},
        {"attribute", "compute step attributions and self-attribution scores"},
        {"cluster", "cluster steps into perspectives and compute mutual-attribution scores"},
        {"curate", "combine scores and select the curated subset"},
        {"export", "write the SFT dataset for curated records"},
        {"diagnose", "write attribution diagnostics as CSV and JSON"},
        {"evaluate", "detection metrics, token consumption and optional judge scores"},
        {"run", "run the full pipeline"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        auto config = stage("config", [&] {
            auto c = resolve_config(o);
            c.validate();
            return c;
        });
        if (command == "ingest") cmd_ingest(config);
        else if (command == "generate") cmd_generate(config);
        else if (command == "filter") cmd_filter(config);
        else if (command == "attribute") cmd_attribute(config);
        else if (command == "cluster") cmd_cluster(config);
        else if (command == "curate") cmd_curate(config, o);
        else if (command == "export") cmd_export(config, o);
        else if (command == "diagnose") cmd_diagnose(config, o);
        else if (command == "evaluate") cmd_evaluate(config, o);
        else cmd_run(config);
    } catch (const StageError& e) {
        std::cerr << "rcurate " << command << ": stage '" << e.stage() << "' failed: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rcurate " << command << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
