// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "curator/analytics.hpp"
#include "curator/curation.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace curator;
using nlohmann::json;
using testing::candidate_from_steps;
using testing::MockOpenAI;
using testing::MockReply;
using testing::ref_log_sigmoid;
using testing::TempDir;

namespace {

/// Collects failed expectations for one criterion.
class Checker {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++count_;
    }
    bool ok() const { return count_ == 0; }
    std::string summary() const {
        std::string s = std::to_string(count_) + " failed check(s)";
        for (const auto& f : failures_) s += "; " + f;
        return s;
    }

private:
    std::vector<std::string> failures_;
    std::size_t count_ = 0;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(12);
    ss << x;
    return ss.str();
}

const Claim kRealClaim{"c", "claim text", Label::Real, "", Split::Train};

// ---------------------------------------------------------------------------

void criterion1(Checker& check) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> weight(-3.0, 3.0);
    auto start = Clock::now();
    double worst = 0.0;
    for (int round = 0; round < 1000; ++round) {
        const int L = 1 + static_cast<int>(rng() % 20);
        std::map<std::string, double> weights;
        std::vector<std::string> names;
        std::vector<double> w;
        double S = 0.0;
        for (int l = 0; l < L; ++l) {
            names.push_back("step" + std::to_string(l));
            w.push_back(weight(rng));
            weights[names.back()] = w.back();
            S += w.back();
        }
        SyntheticLogisticOracle oracle(weights);
        auto d = step_deltas(kRealClaim, candidate_from_steps("c", names, Label::Real), oracle);
        for (int l = 0; l < L; ++l) {
            worst = std::max(worst, std::abs(d.deltas[l] - (ref_log_sigmoid(S) - ref_log_sigmoid(S - w[l]))));
        }
    }
    const double elapsed = seconds_since(start);
    check.expect(worst <= 1e-9, "max deviation " + fmt(worst));
    check.expect(elapsed < 5.0, "runtime " + fmt(elapsed) + " s");
}

void criterion2(Checker& check) {
    auto a = necessity_score({0.5, -0.2, 0.3}, 0.0);
    check.expect(std::abs(a.s_nec - 0.2 * (2.0 / 3.0)) <= 1e-9, "s_nec " + fmt(a.s_nec));
    check.expect(std::abs(a.s_nec - 0.133333) <= 1e-6, "s_nec vs 0.133333");
    check.expect(a.ratio == 1.0 / 3.0, "ratio " + fmt(a.ratio));
    check.expect(unnecessary_ratio({0.5, -0.2, 0.3}) == 1.0 / 3.0, "unnecessary_ratio");
    auto b = necessity_score({-0.1, -0.4});
    check.expect(b.s_nec == 0.0 && b.ratio == 1.0, "all-negative example");
    auto c = necessity_score({1.0});
    check.expect(c.s_nec == 1.0 && c.ratio == 0.0, "single step example");
    check.expect(std::abs(self_score(0.2, 0.074485) - 0.2 * (1.0 - 0.074485)) <= 1e-12, "self_score");
    check.expect(self_score(0.0, 3.0) == 0.0, "self_score with zero necessity");

    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> neg(-5.0, -1e-9);
    std::uniform_real_distribution<double> any(-5.0, 5.0);
    for (int round = 0; round < 2000; ++round) {
        std::vector<double> d(1 + rng() % 30);
        for (double& x : d) x = neg(rng);
        auto r = necessity_score(d);
        check.expect(r.s_nec == 0.0 && r.ratio == 1.0, "all-negative deltas must give s_nec = 0");
        for (double& x : d) x = any(rng);
        auto q = necessity_score(d);
        double mean = 0.0;
        std::size_t below = 0;
        for (double x : d) {
            mean += x;
            below += x < 0.0;
        }
        mean /= static_cast<double>(d.size());
        const double ratio = static_cast<double>(below) / static_cast<double>(d.size());
        check.expect(q.s_nec >= 0.0, "s_nec must be nonnegative");
        check.expect(std::abs(q.s_nec - std::max(0.0, mean) * (1.0 - ratio)) <= 1e-12, "random s_nec");
    }
}

void criterion3(Checker& check) {
    SyntheticLogisticOracle oracle({{"s1", 2.0}, {"s2", -1.0}, {"s3", 0.5}});
    auto cand = candidate_from_steps("c", {"s1", "s2", "s3"}, Label::Real);
    SubsetScorer scorer(kRealClaim, cand, oracle);
    auto k = minimal_sufficient_kappa(scorer, step_deltas(scorer), 0.01);
    check.expect(k.kappa_min == 1 && !k.insufficient, "worked fixture kappa_min");

    std::map<std::string, double> equal;
    std::vector<std::string> names;
    for (int i = 0; i < 6; ++i) {
        names.push_back("e" + std::to_string(i));
        equal[names.back()] = 3.0;
    }
    SyntheticLogisticOracle adversarial(equal);
    auto eq = candidate_from_steps("c", names, Label::Real);
    SubsetScorer s2(kRealClaim, eq, adversarial);
    auto r = minimal_sufficient_kappa(s2, step_deltas(s2), 0.01);
    check.expect(r.insufficient && !r.kappa_min, "equal-weight fixture must be insufficient");
}

void criterion4(Checker& check) {
    const double ln2 = std::log(2.0);
    auto start = Clock::now();
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> delta(-20.0, 20.0);
    for (int round = 0; round < 5000; ++round) {
        const int K = 1 + static_cast<int>(rng() % 6);
        const int M = 1 + static_cast<int>(rng() % 8);
        std::map<std::pair<int, std::size_t>, double> deltas;
        for (int m = 0; m < M; ++m) {
            for (int k = 0; k < K; ++k) {
                if (rng() % 2) deltas[{m, static_cast<std::size_t>(k)}] = delta(rng);
            }
        }
        auto imp = perspective_importance(deltas, K, M);
        for (double phi : imp.phi) check.expect(phi <= 0.0 && std::isfinite(phi), "phi must be finite and <= 0");
        if (deltas.empty()) continue;
        // Raising any one delta strictly raises its perspective's phi.
        auto it = std::next(deltas.begin(), static_cast<long>(rng() % deltas.size()));
        auto raised = deltas;
        raised[it->first] += 0.5;
        auto imp2 = perspective_importance(raised, K, M);
        check.expect(imp2.phi[it->first.first] > imp.phi[it->first.first], "strict monotonicity");
    }

    std::map<std::pair<int, std::size_t>, double> zeros{{{0, 0}, 0.0}, {{0, 2}, 0.0}, {{0, 3}, 0.0}, {{1, 1}, 0.0}};
    auto z = perspective_importance(zeros, 5, 2);
    check.expect(std::abs(z.phi[0] - (-(3.0 / 5.0) * ln2)) <= 1e-12, "all-zero phi[0] " + fmt(z.phi[0]));
    check.expect(std::abs(z.phi[1] - (-(1.0 / 5.0) * ln2)) <= 1e-12, "all-zero phi[1] " + fmt(z.phi[1]));

    auto extreme = perspective_importance({{{0, 0}, -700.0}}, 1, 1);
    check.expect(std::isfinite(extreme.phi[0]) && std::abs(extreme.phi[0] + 700.0) < 1e-9,
                 "delta -700 gives " + fmt(extreme.phi[0]));
    const double elapsed = seconds_since(start);
    check.expect(elapsed < 2.0, "runtime " + fmt(elapsed) + " s");
}

void criterion5(Checker& check) {
    std::vector<Embedding> points = {{0.0, 0.0}, {0.0, 0.1}, {5.0, 5.0}, {5.0, 5.1}};
    // Brute force over every assignment of four points to two nonempty clusters.
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_labels;
    for (int mask = 1; mask < 15; ++mask) {
        std::vector<int> labels(4);
        for (int i = 0; i < 4; ++i) labels[i] = (mask >> i) & 1;
        double sse = 0.0;
        for (int c = 0; c < 2; ++c) {
            double mx = 0, my = 0;
            int n = 0;
            for (int i = 0; i < 4; ++i) {
                if (labels[i] != c) continue;
                mx += points[i][0];
                my += points[i][1];
                ++n;
            }
            mx /= n;
            my /= n;
            for (int i = 0; i < 4; ++i) {
                if (labels[i] == c) sse += std::pow(points[i][0] - mx, 2) + std::pow(points[i][1] - my, 2);
            }
        }
        if (sse < best) {
            best = sse;
            best_labels = labels;
        }
    }
    auto result = kmeans(points, 2, 13);
    bool same_partition = true;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            same_partition &= (result.labels[i] == result.labels[j]) == (best_labels[i] == best_labels[j]);
        }
    }
    check.expect(same_partition, "k-means partition differs from the brute-force optimum");

    std::mt19937_64 rng(505);
    std::normal_distribution<double> normal;
    std::vector<std::vector<Embedding>> steps(4);
    for (auto& cand : steps) {
        cand.resize(3 + rng() % 5);
        for (auto& e : cand) {
            e.resize(16);
            for (double& x : e) x = normal(rng);
        }
    }
    const std::string first = to_json(cluster_perspectives(steps, 5, 99)).dump();
    for (int run = 0; run < 9; ++run) {
        check.expect(to_json(cluster_perspectives(steps, 5, 99)).dump() == first, "serialized model differs");
    }
}

// ---------------------------------------------------------------------------

struct FilterCase {
    Label gold;
    std::string raw;
    bool truncated;
    FilterReason expected;
    std::string detail;
};

std::string rationale(const std::string& tag, const std::string& answer) {
    return "1. Source check: the outlet behind " + tag + " is named.\n2. Statistic check: the figures in " + tag +
           " line up.\nFinal Answer: " + answer;
}

std::string filler(std::size_t words, const std::string& tag) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) s += tag + std::to_string(i) + " ";
    return s;
}

std::string looped(const std::string& phrase, int times) {
    std::string s;
    for (int i = 0; i < times; ++i) s += phrase + " ";
    return s;
}

std::vector<FilterCase> filter_cases() {
    const auto R = Label::Real;
    const auto F = Label::Fake;
    const auto ok = FilterReason::Ok;
    const auto wrong = FilterReason::WrongLabel;
    const auto nobox = FilterReason::NoBoxedAnswer;
    const auto over = FilterReason::OverTokenLimit;
    const auto bad = FilterReason::BadCharacters;
    const auto rep = FilterReason::DegenerateRepetition;
    const std::string junk(40, '\x01');
    const std::string replacement = "\xEF\xBF\xBD\xEF\xBF\xBD\xEF\xBF\xBD";
    const std::string loop = looped("the claim is fake because it says so", 30);
    // Exactly 4096 tokens: 4093 filler words plus "Final Answer: \boxed{..}".
    const std::string at_limit = filler(4093, "w") + "Final Answer: \\boxed{real}";
    const std::string over_limit = filler(4094, "w") + "Final Answer: \\boxed{real}";
    return {
        // Clean candidates.
        {R, rationale("a1", "\\boxed{real}"), false, ok, ""},
        {F, rationale("a2", "\\boxed{fake}"), false, ok, ""},
        {R, rationale("a3", "\\boxed{ Real }"), false, ok, ""},
        {F, rationale("a4", "\\boxed{FAKE}"), false, ok, ""},
        {R, rationale("a5", "\\boxed{fake} on reflection \\boxed{real}"), false, ok, ""},
        {R, at_limit, false, ok, ""},
        {F, "Short analysis with ordinary words and no numbering.\n\n\\boxed{fake}", false, ok, ""},
        {R, rationale("a8", "\\boxed{real}") + "\nSome closing chatter.", false, ok, ""},
        // Rule 1: predicted label differs from gold.
        {R, rationale("b1", "\\boxed{fake}"), false, wrong, ""},
        {F, rationale("b2", "\\boxed{real}"), false, wrong, ""},
        {F, rationale("b3", "\\boxed{fake} then \\boxed{real}"), false, wrong, ""},
        {R, rationale("b4", "\\boxed{Fake}"), false, wrong, ""},
        {R, rationale("b5", "\\boxed{fake}"), true, wrong, ""},
        {F, loop + "\\boxed{real}", false, wrong, ""},
        {R, rationale("b7", "\\boxed{fake}") + junk, false, wrong, ""},
        {F, over_limit, false, wrong, ""},
        // Rule 2: no parsable boxed label.
        {R, rationale("n1", "real"), false, nobox, ""},
        {F, rationale("n2", "\\boxed{unclear}"), false, nobox, ""},
        {R, "No conclusion was reached.", false, nobox, ""},
        {F, rationale("n4", "\\boxed{}"), true, nobox, ""},
        {R, rationale("n5", "") + junk, false, nobox, ""},
        {F, loop, false, nobox, ""},
        // Rule 3: over the token limit or cut off.
        {R, over_limit, false, over, "token_count"},
        {F, rationale("o2", "\\boxed{fake}"), true, over, "truncated"},
        {R, over_limit, true, over, "token_count+truncated"},
        {F, rationale("o4", "\\boxed{fake}") + junk, true, over, "truncated"},
        {R, loop + rationale("o5", "\\boxed{real}"), true, over, "truncated"},
        {F, filler(5000, "x") + "\\boxed{fake}" + junk, false, over, "token_count"},
        // Rule 4: more than 0.5% bad characters.
        {R, rationale("d1", "\\boxed{real}") + junk, false, bad, ""},
        {F, rationale("d2", "\\boxed{fake}") + replacement, false, bad, ""},
        {R, "\x07\x07\x07" + rationale("d3", "\\boxed{real}"), false, bad, ""},
        {F, rationale("d4", "\\boxed{fake}") + "\xFF\xFE\xFF\xFE", false, bad, ""},
        {R, loop + junk + rationale("d5", "\\boxed{real}"), false, bad, ""},
        {F, "Analysis\x1B[31m colored\x1B[0m output\x1B[1m here\x1B[0m \\boxed{fake}", false, bad, ""},
        // Rule 5: degenerate repetition.
        {R, loop + rationale("r1", "\\boxed{real}"), false, rep, ""},
        {F, rationale("r2", "") + looped("same same", 40) + "\\boxed{fake}", false, rep, ""},
        {R, looped("the source is the source is", 20) + "\\boxed{real}", false, rep, ""},
        {F, looped(filler(20, "blk"), 3) + "\\boxed{fake}", false, rep, ""},
        {R, rationale("r5", "\\boxed{real}") + "\n" + looped("and then", 40), false, rep, ""},
        {F, looped("x", 200) + "\\boxed{fake}", false, rep, ""},
    };
}

void criterion6(Checker& check) {
    auto cases = filter_cases();
    check.expect(cases.size() == 40, "fixture size " + std::to_string(cases.size()));
    std::set<FilterReason> seen;
    int index = 0;
    for (const auto& fc : cases) {
        ++index;
        Claim claim{"c", "claim", fc.gold, "", Split::Train};
        auto cand = make_candidate("c", "gen", fc.raw, index, fc.truncated);
        auto verdict = apply_heuristic_filters(cand, claim);
        seen.insert(verdict.reason);
        const bool match = verdict.reason == fc.expected && verdict.detail == fc.detail &&
                           verdict.keep == (fc.expected == FilterReason::Ok);
        check.expect(match, "case " + std::to_string(index) + ": expected " + std::string(to_string(fc.expected)) +
                                " got " + std::string(to_string(verdict.reason)) + " (" + verdict.detail + ")");
    }
    check.expect(seen.size() == 6, "every rule and the keep verdict must occur");
}

// ---------------------------------------------------------------------------

const std::vector<std::string> kTopics = {"outlet", "statistic", "timeline", "location", "quote", "image",
                                          "expert", "agency", "budget", "survey", "witness", "archive"};
const std::vector<std::string> kVerbs = {"confirms", "matches", "supports", "corroborates"};
const std::vector<std::string> kDrift = {"weather", "recipes", "sports", "gardening", "music", "travel",
                                         "fashion", "movies", "pets", "cars", "poetry", "chess"};

/// Planted corpus: candidate 1 is good (3 steps of weight +1 toward the gold
/// label); candidates 2 and 3 are bad (12 steps, 8 of weight -0.5 and 4 of
/// weight +0.5). Weights are keyed by the segmented step text.
struct PlantedCorpus {
    std::vector<json> claims;
    std::vector<json> candidates;
    json weights = json::object();
};

PlantedCorpus planted_corpus(int n_claims) {
    PlantedCorpus p;
    for (int i = 0; i < n_claims; ++i) {
        const std::string id = "p" + std::to_string(100 + i);
        const Label gold = i % 2 ? Label::Fake : Label::Real;
        const double sign = gold == Label::Real ? 1.0 : -1.0;
        const std::string box = "\\boxed{" + std::string(to_string(gold)) + "}";
        p.claims.push_back({{"id", id}, {"text", "Planted claim number " + std::to_string(i) + " about " + kTopics[i % 12]},
                            {"label", to_string(gold)}});

        auto add = [&](int index, const std::vector<std::pair<std::string, double>>& steps) {
            std::string raw;
            for (std::size_t s = 0; s < steps.size(); ++s) {
                raw += std::to_string(s + 1) + ". " + steps[s].first + "\n";
            }
            raw += "\nFinal Answer: " + box;
            auto cand = make_candidate(id, "planted", raw, index);
            if (cand.steps.size() != steps.size()) throw Error("planted rationale segmented unexpectedly");
            for (std::size_t s = 0; s < steps.size(); ++s) p.weights[cand.steps[s].text] = sign * steps[s].second;
            p.candidates.push_back({{"claim_id", id}, {"generator", "planted"}, {"raw_text", raw},
                                    {"candidate_index", index}});
        };

        std::vector<std::pair<std::string, double>> good;
        for (int s = 0; s < 3; ++s) {
            const auto& topic = kTopics[(i + 4 * s) % 12];
            good.push_back({"The " + topic + " cited in claim " + id + " " + kVerbs[s % 4] + " the record.", 1.0});
        }
        add(1, good);
        for (int b = 0; b < 2; ++b) {
            std::vector<std::pair<std::string, double>> bad;
            for (int s = 0; s < 12; ++s) {
                const auto& drift = kDrift[(i + s + 5 * b) % 12];
                const double w = s % 3 == 2 ? 0.5 : -0.5;
                bad.push_back({"An aside on " + drift + " number " + std::to_string(s) + " while reading " + id +
                                   " variant " + std::to_string(b) + ".",
                               w});
            }
            add(2 + b, bad);
        }
    }
    return p;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
    std::string text;
    for (const auto& l : lines) text += l.dump() + "\n";
    testing::write_file(path, text);
}

void criterion7(Checker& check) {
    TempDir dir;
    auto corpus = planted_corpus(50);
    write_jsonl(dir / "claims.jsonl", corpus.claims);
    write_jsonl(dir / "candidates.jsonl", corpus.candidates);
    testing::write_file(dir / "weights.json", json{{"bias", 0.0}, {"weights", corpus.weights}}.dump());

    PipelineConfig config;
    config.claims = dir / "claims.jsonl";
    config.candidates = dir / "candidates.jsonl";
    config.output_dir = dir / "out";
    config.backend.weights = dir / "weights.json";
    config.budget = 50;
    config.per_claim_cap = 1;
    check.expect(config.self.zeta == 0.0 && config.self.kappa == 3 && config.self.epsilon == 0.01 &&
                     config.mutual.m == 8,
                 "defaults");

    auto start = Clock::now();
    auto summary = run_pipeline(config);
    const double elapsed = seconds_since(start);
    check.expect(summary.post_heuristic == 150, "post-heuristic count " + std::to_string(summary.post_heuristic));
    check.expect(summary.selected == 50, "selected " + std::to_string(summary.selected));

    std::istringstream curated(testing::read_file(dir / "out" / "curated.jsonl"));
    std::string line;
    std::size_t selected = 0, good = 0;
    while (std::getline(curated, line)) {
        ++selected;
        good += json::parse(line)["candidate_index"] == 1;
    }
    const double precision = selected ? static_cast<double>(good) / static_cast<double>(selected) : 0.0;
    check.expect(selected > 0 && precision == 1.0, "selection precision " + fmt(precision));
    check.expect(elapsed < 30.0, "runtime " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------

RemoteConfig mock_config(const std::string& url) {
    RemoteConfig c;
    c.base_url = url;
    c.retry_budget = 2;
    c.backoff_ms = 0;
    c.timeout_seconds = 5;
    return c;
}

void criterion8(Checker& check) {
    MockOpenAI gen([](const json&) {
        return MockReply{200, MockOpenAI::completion("1. Source check: the outlet is unknown.\n"
                                                     "2. Statistic check: the figures are invented.\n"
                                                     "Final Answer: \\boxed{fake}")};
    });
    RemoteChatClient chat(std::make_shared<const RemoteClient>(mock_config(gen.base_url())));
    GenerationConfig gcfg;
    gcfg.model = "gen";
    auto outcome = generate_rationales({"c1", "A claim.", Label::Fake, "", Split::Train}, gcfg, chat);
    check.expect(outcome.candidates.size() == 1 && outcome.candidates[0].steps.size() == 2 &&
                     outcome.candidates[0].predicted_label == Label::Fake,
                 "generated candidate");
    auto reqs = gen.requests();
    check.expect(reqs.size() == 1 && reqs[0]["temperature"] == 0.6, "temperature 0.6 in request body");

    json top = json::array({{{"token", "real"}, {"logprob", -0.25}}, {{"token", "fake"}, {"logprob", -1.5}}});
    json logprobs = json::array({{{"token", "real"}, {"logprob", -0.25}, {"top_logprobs", top}}});
    std::atomic<int> calls{0};
    MockOpenAI scorer([&](const json&) {
        if (calls++ == 0) return MockReply{500, {{"error", "transient"}}};
        return MockReply{200, MockOpenAI::completion("real", "stop", logprobs)};
    });
    auto client = std::make_shared<const RemoteClient>(mock_config(scorer.base_url()));
    RemoteLogProbOracle oracle(client, "scorer");
    ScoringRequest req{"A claim.", {"step one", "step two"}, Label::Real};
    const double first = oracle.score(req);
    check.expect(std::abs(first - (-0.25)) < 1e-12, "logprob score " + fmt(first));
    check.expect(client->attempts() == 2 && scorer.hits() == 2, "retry after a 500");
    const auto hits = scorer.hits();
    const double again = oracle.score(req);
    check.expect(again == first && scorer.hits() == hits, "cached request must not reach the server");
    ScoringRequest fake = req;
    fake.label = Label::Fake;
    check.expect(std::abs(oracle.score(fake) - (-1.5)) < 1e-12, "fake label logprob");
    auto bodies = scorer.requests();
    check.expect(!bodies.empty() && bodies.back()["logprobs"] == true, "logprobs requested");
}

void criterion9(Checker& check) {
    auto m = detection_metrics({{Label::Fake, Label::Fake}, {Label::Fake, Label::Real}, {Label::Real, Label::Real},
                                {Label::Real, Label::Real}});
    check.expect(m.accuracy == 0.75, "accuracy " + fmt(m.accuracy));
    check.expect(std::abs(m.fake.f1 - 0.6667) <= 1e-4, "F1 fake " + fmt(m.fake.f1));
    check.expect(std::abs(m.real.f1 - 0.8) <= 1e-4, "F1 real " + fmt(m.real.f1));

    std::mt19937_64 rng(909);
    for (int round = 0; round < 1000; ++round) {
        std::vector<std::pair<Label, std::optional<Label>>> pairs(1 + rng() % 60);
        for (auto& [gold, pred] : pairs) {
            gold = rng() % 2 ? Label::Fake : Label::Real;
            auto r = rng() % 5;
            pred = r == 0 ? std::nullopt : std::optional<Label>(r % 2 ? Label::Fake : Label::Real);
        }
        // Independent count: per class, tp/fp/fn from scratch.
        auto f1_of = [&](Label cls) {
            double tp = 0, fp = 0, fn = 0;
            for (const auto& [g, p] : pairs) {
                const bool said = p && *p == cls;
                if (said && g == cls) ++tp;
                if (said && g != cls) ++fp;
                if (!said && g == cls) ++fn;
            }
            const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
            const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
            return prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        };
        double correct = 0;
        for (const auto& [g, p] : pairs) correct += p && *p == g;
        auto got = detection_metrics(pairs);
        check.expect(got.accuracy == correct / static_cast<double>(pairs.size()), "random accuracy");
        check.expect(got.fake.f1 == f1_of(Label::Fake), "random F1 fake");
        check.expect(got.real.f1 == f1_of(Label::Real), "random F1 real");
    }
}

void criterion10(Checker& check) {
    TempDir dir;
    std::ifstream in(std::string(CURATOR_FIXTURES) + "/config.json");
    auto base = config_from_json(json::parse(in), CURATOR_FIXTURES);
    std::vector<std::filesystem::path> outs = {dir / "a", dir / "b"};
    for (const auto& out : outs) {
        auto config = base;
        config.output_dir = out;
        run_pipeline(config);
    }
    std::size_t compared = 0;
    for (const auto& entry : std::filesystem::directory_iterator(outs[0])) {
        const auto name = entry.path().filename();
        ++compared;
        check.expect(std::filesystem::exists(outs[1] / name), name.string() + " missing in second run");
        check.expect(testing::read_file(entry.path()) == testing::read_file(outs[1] / name),
                     name.string() + " differs");
    }
    for (const char* f : {"sft.jsonl", "curated.jsonl", "scores.jsonl", "summary.json", "filter_report.jsonl"}) {
        check.expect(std::filesystem::exists(outs[0] / f), std::string(f) + " not written");
    }
    check.expect(compared >= 10, "only " + std::to_string(compared) + " files written");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Checker&)>>> criteria = {
        {"analytic step deltas", criterion1},
        {"necessity, ratio and self score arithmetic", criterion2},
        {"minimal sufficient kappa boundary", criterion3},
        {"perspective importance properties", criterion4},
        {"clustering optimality and determinism", criterion5},
        {"heuristic filter conformance", criterion6},
        {"planted-quality separation", criterion7},
        {"remote backend against a mock server", criterion8},
        {"detection metrics oracle", criterion9},
        {"pipeline determinism", criterion10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Checker check;
        std::string error;
        try {
            criteria[i].second(check);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const bool ok = error.empty() && check.ok();
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first;
        if (!error.empty()) std::cout << " (exception: " << error << ")";
        else if (!ok) std::cout << " (" << check.summary() << ")";
        std::cout << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
