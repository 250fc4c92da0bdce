#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curator/types.hpp"

namespace curator {

/// Label inside the last `\boxed{...}` whose trimmed, lowercased content is
/// exactly "real" or "fake".
std::optional<Label> extract_prediction(std::string_view raw_text);

/// Byte range of the expression extract_prediction reads its label from.
std::optional<Span> final_answer_span(std::string_view raw_text);

struct SegmentOptions {
    /// Steps whose trimmed text is shorter than this are merged into the
    /// previous step (into the next one when there is no previous step).
    std::size_t min_step_chars = 10;
};

/// Splits a rationale into verification steps. Numbered items at line start
/// take priority, then markdown headers, then blank-line paragraphs. The
/// trailing answer block holding the final boxed answer is not a step.
std::vector<VerificationStep> segment_steps(std::string_view raw_text, const SegmentOptions& options = {});

struct DegenerateFlags {
    bool repetition = false;
    bool bad_characters = false;

    bool any() const { return repetition || bad_characters; }
    bool operator==(const DegenerateFlags&) const = default;
};

struct DegenerateOptions {
    std::size_t window_tokens = 20;
    std::size_t min_repeats = 3;
    double bad_character_fraction = 0.005;
};

/// Share of code points that are control characters (other than tab, newline
/// and carriage return), U+FFFD, or malformed UTF-8 bytes.
double bad_character_fraction(std::string_view raw_text);

/// True when some span of tokens with period p <= window repeats long enough to
/// hold `min_repeats` back-to-back copies of a `window`-token block. For
/// p == window this is literally a window repeated min_repeats times.
bool has_repetition(std::string_view raw_text, std::size_t window = 20, std::size_t min_repeats = 3);

DegenerateFlags detect_degenerate(std::string_view raw_text, const DegenerateOptions& options = {});

enum class FilterReason { Ok, WrongLabel, NoBoxedAnswer, OverTokenLimit, BadCharacters, DegenerateRepetition };

std::string_view to_string(FilterReason reason);

struct FilterVerdict {
    bool keep = true;
    FilterReason reason = FilterReason::Ok;
    /// For OverTokenLimit: "token_count", "truncated" or "token_count+truncated".
    std::string detail;

    bool operator==(const FilterVerdict&) const = default;
};

struct FilterOptions {
    std::int64_t token_limit = 4096;
    DegenerateOptions degenerate;
};

/// Applies the five discard rules in order and reports the first that fails:
/// wrong label, missing boxed answer, over length or cut off, bad characters,
/// repetition. A missing prediction is reported by the second rule, not the
/// first. Throws ValidationError when the candidate belongs to another claim.
FilterVerdict apply_heuristic_filters(const RationaleCandidate& candidate, const Claim& claim,
                                      const FilterOptions& options = {});

}  // namespace curator
