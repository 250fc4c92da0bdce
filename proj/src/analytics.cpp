#include "curator/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <regex>
#include <tuple>

#include "curator/parallel.hpp"

namespace curator {

using nlohmann::json;

ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    ClassMetrics m;
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

DetectionMetrics detection_metrics(const std::vector<std::pair<Label, std::optional<Label>>>& pairs) {
    if (pairs.empty()) throw ValidationError("detection metrics need at least one prediction");
    DetectionMetrics out;
    auto& c = out.counts;
    std::int64_t correct = 0;
    for (const auto& [gold, pred] : pairs) {
        if (!pred) {
            ++c.unparsed;
            (gold == Label::Fake ? c.fn_fake : c.fn_real)++;
            continue;
        }
        if (*pred == gold) {
            ++correct;
            (gold == Label::Fake ? c.tp_fake : c.tp_real)++;
        } else if (*pred == Label::Fake) {
            ++c.fp_fake;
            ++c.fn_real;
        } else {
            ++c.fp_real;
            ++c.fn_fake;
        }
    }
    out.total = static_cast<std::int64_t>(pairs.size());
    out.accuracy = static_cast<double>(correct) / static_cast<double>(out.total);
    out.fake = class_metrics(c.tp_fake, c.fp_fake, c.fn_fake);
    out.real = class_metrics(c.tp_real, c.fp_real, c.fn_real);
    return out;
}

json to_json(const DetectionMetrics& m) {
    auto cls = [](const ClassMetrics& x) { return json{{"precision", x.precision}, {"recall", x.recall}, {"f1", x.f1}}; };
    const auto& c = m.counts;
    return json{{"total", m.total},
                {"accuracy", m.accuracy},
                {"fake", cls(m.fake)},
                {"real", cls(m.real)},
                {"counts",
                 {{"tp_fake", c.tp_fake},
                  {"fp_fake", c.fp_fake},
                  {"fn_fake", c.fn_fake},
                  {"tp_real", c.tp_real},
                  {"fp_real", c.fp_real},
                  {"fn_real", c.fn_real},
                  {"unparsed", c.unparsed}}}};
}

// ---------------------------------------------------------------------------

std::string Histogram::to_csv() const {
    std::string out = categorical() ? "category,count\n" : "edge,count\n";
    char buf[64];
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (categorical()) {
            out += categories[i];
        } else {
            std::snprintf(buf, sizeof buf, "%.6g", edges[i]);
            out += buf;
        }
        out += ',';
        out += std::to_string(counts[i]);
        out += '\n';
    }
    return out;
}

json to_json(const Histogram& h) {
    json j{{"counts", h.counts}, {"total", h.total}};
    if (h.categorical()) j["categories"] = h.categories;
    else j["edges"] = h.edges;
    return j;
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
    if (bins == 0 || !(hi > lo)) throw ValidationError("histogram needs hi > lo and at least one bin");
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    edges.back() = hi;
    return edges;
}

Histogram numeric_histogram(const std::vector<double>& values, const std::vector<double>& edges) {
    if (edges.size() < 2) throw ValidationError("histogram needs at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) throw ValidationError("histogram edges must be strictly increasing");
    }
    Histogram h;
    h.edges = edges;
    h.counts.assign(edges.size() - 1, 0);
    for (double v : values) {
        if (std::isnan(v)) throw ValidationError("cannot bin NaN");
        // upper_bound gives the first edge > v; bin = that position - 1.
        auto pos = std::upper_bound(edges.begin(), edges.end(), v) - edges.begin();
        auto bin = std::clamp<std::ptrdiff_t>(pos - 1, 0, static_cast<std::ptrdiff_t>(h.counts.size()) - 1);
        ++h.counts[bin];
    }
    h.total = static_cast<std::int64_t>(values.size());
    return h;
}

namespace {

Histogram categorical_histogram(const std::map<std::tuple<long, int>, std::int64_t>& buckets,
                                const std::function<std::string(long, int)>& name) {
    Histogram h;
    for (const auto& [key, count] : buckets) {
        h.categories.push_back(name(std::get<0>(key), std::get<1>(key)));
        h.counts.push_back(count);
        h.total += count;
    }
    return h;
}

double negative_fraction(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    auto neg = std::count_if(values.begin(), values.end(), [](double d) { return d < 0.0; });
    return static_cast<double>(neg) / static_cast<double>(values.size());
}

}  // namespace

DeltaDistribution delta_distribution(const std::vector<AttributionProfile>& profiles,
                                     const std::vector<bool>& correct, const std::vector<double>& edges) {
    if (profiles.size() != correct.size()) throw ValidationError("one correctness flag per profile is required");
    std::vector<double> good, bad;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        auto& target = correct[i] ? good : bad;
        target.insert(target.end(), profiles[i].deltas.begin(), profiles[i].deltas.end());
    }
    DeltaDistribution out;
    out.correct = numeric_histogram(good, edges);
    out.incorrect = numeric_histogram(bad, edges);
    out.negative_fraction_correct = negative_fraction(good);
    out.negative_fraction_incorrect = negative_fraction(bad);
    return out;
}

Histogram kappa_histogram(const std::vector<AttributionProfile>& profiles) {
    std::map<std::tuple<long, int>, std::int64_t> buckets;
    for (const auto& p : profiles) {
        if (p.kappa_insufficient || !p.kappa_min) ++buckets[{static_cast<long>(p.deltas.size()), 1}];
        else ++buckets[{*p.kappa_min, 0}];
    }
    return categorical_histogram(buckets, [](long value, int insufficient) {
        return std::to_string(value) + (insufficient ? " (insufficient)" : "");
    });
}

Histogram step_count_histogram(const std::vector<RationaleCandidate>& candidates) {
    std::map<std::tuple<long, int>, std::int64_t> buckets;
    for (const auto& c : candidates) ++buckets[{static_cast<long>(c.steps.size()), 0}];
    return categorical_histogram(buckets, [](long value, int) { return std::to_string(value); });
}

Histogram unnecessary_ratio_histogram(const std::vector<AttributionProfile>& profiles) {
    std::vector<double> ratios;
    ratios.reserve(profiles.size());
    for (const auto& p : profiles) ratios.push_back(p.unnecessary_ratio);
    return numeric_histogram(ratios, uniform_edges(0.0, 1.0, 10));
}

std::map<std::string, double> token_consumption(const std::vector<RationaleCandidate>& candidates) {
    std::map<std::string, std::pair<double, std::int64_t>> sums;
    for (const auto& c : candidates) {
        auto& [sum, n] = sums[c.generator];
        sum += static_cast<double>(c.token_count);
        ++n;
    }
    std::map<std::string, double> out;
    for (const auto& [gen, s] : sums) out[gen] = s.first / static_cast<double>(s.second);
    return out;
}

// ---------------------------------------------------------------------------

std::string render_judge_prompt(const JudgeItem& item) {
    std::string p =
        "You are evaluating the rationale a model wrote while judging whether a social media claim is real or "
        "fake.\n\n"
        "Claim: ";
    p += item.claim_text;
    p += "\nGround-truth label: ";
    p += to_string(item.gold);
    p += "\n\nRationale:\n";
    p += item.rationale;
    p +=
        "\n\nRate the rationale on three criteria, each as an integer from 1 to 5:\n"
        "M (Misleadingness): how far the rationale leads away from the ground-truth label. "
        "1 = not misleading, 5 = very misleading.\n"
        "I (Informativeness): whether it provides knowledge beyond the claim itself. "
        "1 = not informative, 5 = very informative.\n"
        "R (Readability): fluency and logical clarity. 1 = poor, 5 = excellent.\n\n"
        "Reply on one line in exactly this format: M:<score> I:<score> R:<score>";
    return p;
}

std::optional<JudgeScores> parse_judge_reply(std::string_view reply) {
    const std::string text(reply);
    auto in_range = [](long v) { return v >= 1 && v <= 5; };
    static const std::regex labeled(R"(\bM\s*[:=]\s*(-?\d+)\b[\s\S]*?\bI\s*[:=]\s*(-?\d+)\b[\s\S]*?\bR\s*[:=]\s*(-?\d+)\b)");
    std::smatch match;
    std::vector<long> values;
    if (std::regex_search(text, match, labeled)) {
        for (int g = 1; g <= 3; ++g) values.push_back(std::stol(match[g].str()));
    } else {
        static const std::regex number(R"(-?\d+(\.\d+)?)");
        for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator(); ++it) {
            if ((*it)[1].matched) return std::nullopt;  // non-integer score
            values.push_back(std::stol(it->str()));
        }
        if (values.size() != 3) return std::nullopt;
    }
    if (!std::all_of(values.begin(), values.end(), in_range)) return std::nullopt;
    return JudgeScores{static_cast<int>(values[0]), static_cast<int>(values[1]), static_cast<int>(values[2])};
}

json to_json(const JudgeReport& r) {
    json scores = json::array();
    for (const auto& s : r.scores) {
        if (s) scores.push_back({{"M", s->misleadingness}, {"I", s->informativeness}, {"R", s->readability}});
        else scores.push_back(nullptr);
    }
    return json{{"scores", std::move(scores)},
                {"mean", {{"M", r.mean_misleadingness}, {"I", r.mean_informativeness}, {"R", r.mean_readability}}},
                {"missing", r.missing}};
}

JudgeReport judge_scores(const std::vector<JudgeItem>& items, ChatCompleter& judge, const std::string& model,
                         std::size_t max_in_flight) {
    JudgeReport report;
    report.scores.resize(items.size());
    parallel_for(items.size(), max_in_flight, [&](std::size_t i) {
        ChatRequest request;
        request.model = model;
        request.temperature = 0.0;
        request.max_tokens = 64;
        request.messages = {{"user", render_judge_prompt(items[i])}};
        for (int attempt = 0; attempt < 2 && !report.scores[i]; ++attempt) {
            report.scores[i] = parse_judge_reply(judge.complete(request).content);
        }
    });
    std::size_t present = 0;
    for (const auto& s : report.scores) {
        if (!s) {
            ++report.missing;
            continue;
        }
        ++present;
        report.mean_misleadingness += s->misleadingness;
        report.mean_informativeness += s->informativeness;
        report.mean_readability += s->readability;
    }
    if (present == 0) throw Error("judge produced no parsable scores");
    report.mean_misleadingness /= static_cast<double>(present);
    report.mean_informativeness /= static_cast<double>(present);
    report.mean_readability /= static_cast<double>(present);
    return report;
}

}  // namespace curator
