#include "curator/rationale_parse.hpp"

#include <regex>

#include "curator/text.hpp"

namespace curator {

namespace {

constexpr std::string_view kBoxed = "\\boxed{";

struct BoxedExpr {
    std::size_t start = 0;  // offset of the backslash
    std::string content;
};

// All well-formed \boxed{...} expressions in order. Braces nest; an
// expression without its closing brace is not well-formed.
std::vector<BoxedExpr> find_boxed(std::string_view text) {
    std::vector<BoxedExpr> out;
    std::size_t pos = 0;
    while ((pos = text.find(kBoxed, pos)) != std::string_view::npos) {
        std::size_t open = pos + kBoxed.size();
        int depth = 1;
        std::size_t i = open;
        for (; i < text.size() && depth > 0; ++i) {
            if (text[i] == '{') ++depth;
            else if (text[i] == '}') --depth;
        }
        if (depth == 0) out.push_back({pos, std::string(text.substr(open, i - 1 - open))});
        pos = open;
    }
    return out;
}

std::optional<Label> boxed_label(const BoxedExpr& expr) {
    return parse_label(to_lower_ascii(trim(expr.content)));
}

struct Line {
    std::size_t start = 0;
    std::size_t end = 0;  // excludes the newline
};

std::vector<Line> split_lines(std::string_view text, std::size_t limit) {
    std::vector<Line> lines;
    std::size_t start = 0;
    while (start < limit) {
        auto nl = text.find('\n', start);
        std::size_t end = (nl == std::string_view::npos || nl > limit) ? limit : nl;
        lines.push_back({start, end});
        start = end + 1;
    }
    return lines;
}

const std::regex& numbered_marker() {
    static const std::regex re(R"(^[ \t]*[*_]{0,2}(step[ \t]*\d+[ \t]*[:.)\-]?|\d{1,3}[.)])[*_]{0,2}([ \t]|$))",
                               std::regex::icase | std::regex::optimize);
    return re;
}

const std::regex& header_marker() {
    static const std::regex re(R"(^[ \t]{0,3}#{1,6}[ \t]+\S)", std::regex::optimize);
    return re;
}

const std::regex& answer_marker() {
    static const std::regex re(
        R"(^[ \t]*[#*_ \t]*(\d{1,3}[.)][ \t]*)?[*_]*(final answer|final verdict|conclusion|verdict|answer)\b)",
        std::regex::icase | std::regex::optimize);
    return re;
}

bool matches(const std::regex& re, std::string_view line) {
    return std::regex_search(line.begin(), line.end(), re);
}

bool is_marker(std::string_view line) { return matches(numbered_marker(), line) || matches(header_marker(), line); }

// Offset where the trailing answer block begins, or text.size() when there is
// no boxed answer.
std::size_t answer_block_start(std::string_view text) {
    auto boxed = find_boxed(text);
    if (boxed.empty()) return text.size();
    const BoxedExpr* last = &boxed.back();
    for (auto it = boxed.rbegin(); it != boxed.rend(); ++it) {
        if (boxed_label(*it)) {
            last = &*it;
            break;
        }
    }
    auto lines = split_lines(text, text.size());
    std::size_t at = 0;
    while (at + 1 < lines.size() && lines[at + 1].start <= last->start) ++at;
    std::size_t start = lines[at].start;
    // Walk back to the nearest step marker; the earliest answer-style line in
    // that range opens the block.
    for (std::size_t k = at + 1; k-- > 0;) {
        auto line = text.substr(lines[k].start, lines[k].end - lines[k].start);
        if (matches(answer_marker(), line)) start = lines[k].start;
        if (is_marker(line)) break;
    }
    return start;
}

void push_segment(std::string_view text, std::size_t begin, std::size_t end, std::vector<Span>& out) {
    auto piece = text.substr(begin, end - begin);
    auto trimmed = trim(piece);
    if (trimmed.empty()) return;
    std::size_t offset = begin + static_cast<std::size_t>(trimmed.data() - piece.data());
    out.push_back({offset, offset + trimmed.size()});
}

std::vector<Span> split_at_markers(std::string_view text, const std::vector<Line>& lines, std::size_t body_end,
                                   const std::regex& marker) {
    std::vector<std::size_t> cuts;
    for (const auto& l : lines) {
        if (matches(marker, text.substr(l.start, l.end - l.start))) cuts.push_back(l.start);
    }
    std::vector<Span> spans;
    if (cuts.empty()) return spans;
    push_segment(text, 0, cuts.front(), spans);
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        push_segment(text, cuts[i], i + 1 < cuts.size() ? cuts[i + 1] : body_end, spans);
    }
    return spans;
}

std::vector<Span> split_paragraphs(std::string_view text, const std::vector<Line>& lines, std::size_t body_end) {
    std::vector<Span> spans;
    std::optional<std::size_t> open;
    for (const auto& l : lines) {
        bool blank = trim(text.substr(l.start, l.end - l.start)).empty();
        if (blank && open) {
            push_segment(text, *open, l.start, spans);
            open.reset();
        } else if (!blank && !open) {
            open = l.start;
        }
    }
    if (open) push_segment(text, *open, body_end, spans);
    return spans;
}

}  // namespace

std::optional<Label> extract_prediction(std::string_view raw_text) {
    auto boxed = find_boxed(raw_text);
    for (auto it = boxed.rbegin(); it != boxed.rend(); ++it) {
        if (auto label = boxed_label(*it)) return label;
    }
    return std::nullopt;
}

std::optional<Span> final_answer_span(std::string_view raw_text) {
    auto boxed = find_boxed(raw_text);
    for (auto it = boxed.rbegin(); it != boxed.rend(); ++it) {
        if (boxed_label(*it)) return Span{it->start, it->start + kBoxed.size() + it->content.size() + 1};
    }
    return std::nullopt;
}

std::vector<VerificationStep> segment_steps(std::string_view raw_text, const SegmentOptions& options) {
    const std::size_t body_end = answer_block_start(raw_text);
    auto lines = split_lines(raw_text, body_end);

    auto spans = split_at_markers(raw_text, lines, body_end, numbered_marker());
    if (spans.empty()) spans = split_at_markers(raw_text, lines, body_end, header_marker());
    if (spans.empty()) spans = split_paragraphs(raw_text, lines, body_end);

    std::vector<Span> merged;
    for (const auto& span : spans) {
        bool short_step = span.end - span.start < options.min_step_chars;
        if (short_step && !merged.empty()) {
            merged.back().end = span.end;
        } else if (!merged.empty() && merged.back().end - merged.back().start < options.min_step_chars) {
            // A short leading step is folded forward.
            merged.back().end = span.end;
        } else {
            merged.push_back(span);
        }
    }

    std::vector<VerificationStep> steps;
    steps.reserve(merged.size());
    for (const auto& span : merged) {
        steps.push_back({steps.size(), std::string(raw_text.substr(span.start, span.end - span.start)), span});
    }
    return steps;
}

double bad_character_fraction(std::string_view raw_text) {
    auto cps = decode_utf8(raw_text);
    if (cps.empty()) return 0.0;
    std::size_t bad = 0;
    for (char32_t cp : cps) {
        bool control = (cp < 0x20 && cp != '\t' && cp != '\n' && cp != '\r') || cp == 0x7F ||
                       (cp >= 0x80 && cp <= 0x9F);
        if (control || cp == 0xFFFD) ++bad;
    }
    return static_cast<double>(bad) / static_cast<double>(cps.size());
}

bool has_repetition(std::string_view raw_text, std::size_t window, std::size_t min_repeats) {
    if (window == 0 || min_repeats < 2) return false;
    auto tokens = whitespace_tokens(raw_text);
    const std::size_t needed = (min_repeats - 1) * window;
    for (std::size_t period = 1; period <= window; ++period) {
        std::size_t run = 0;
        for (std::size_t j = 0; j + period < tokens.size(); ++j) {
            run = tokens[j] == tokens[j + period] ? run + 1 : 0;
            if (run >= needed) return true;
        }
    }
    return false;
}

DegenerateFlags detect_degenerate(std::string_view raw_text, const DegenerateOptions& options) {
    DegenerateFlags flags;
    flags.repetition = has_repetition(raw_text, options.window_tokens, options.min_repeats);
    flags.bad_characters = bad_character_fraction(raw_text) > options.bad_character_fraction;
    return flags;
}

std::string_view to_string(FilterReason reason) {
    switch (reason) {
        case FilterReason::Ok: return "ok";
        case FilterReason::WrongLabel: return "wrong_label";
        case FilterReason::NoBoxedAnswer: return "no_boxed_answer";
        case FilterReason::OverTokenLimit: return "over_token_limit";
        case FilterReason::BadCharacters: return "bad_characters";
        case FilterReason::DegenerateRepetition: return "degenerate_repetition";
    }
    return "unknown";
}

FilterVerdict apply_heuristic_filters(const RationaleCandidate& candidate, const Claim& claim,
                                      const FilterOptions& options) {
    if (candidate.claim_id != claim.id) {
        throw ValidationError("candidate for claim '" + candidate.claim_id + "' checked against claim '" + claim.id +
                              "'");
    }
    auto reject = [](FilterReason reason, std::string detail = {}) {
        return FilterVerdict{false, reason, std::move(detail)};
    };
    if (candidate.predicted_label && *candidate.predicted_label != claim.label) return reject(FilterReason::WrongLabel);
    if (!candidate.predicted_label) return reject(FilterReason::NoBoxedAnswer);

    bool over = candidate.token_count > options.token_limit;
    if (over || candidate.truncated) {
        return reject(FilterReason::OverTokenLimit,
                      over && candidate.truncated ? "token_count+truncated" : over ? "token_count" : "truncated");
    }
    auto flags = detect_degenerate(candidate.raw_text, options.degenerate);
    if (flags.bad_characters) return reject(FilterReason::BadCharacters);
    if (flags.repetition) return reject(FilterReason::DegenerateRepetition);
    return {};
}

}  // namespace curator
