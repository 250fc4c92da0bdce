#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace curator {

enum class Label { Real, Fake };

enum class Split { Train, Eval };

std::string_view to_string(Label label);
std::string_view to_string(Split split);
std::optional<Label> parse_label(std::string_view text);
std::optional<Split> parse_split(std::string_view text);

/// The other class of a binary veracity label.
constexpr Label opposite(Label label) { return label == Label::Real ? Label::Fake : Label::Real; }

struct Claim {
    std::string id;
    std::string text;
    Label label = Label::Real;
    std::string source;
    Split split = Split::Train;

    bool operator==(const Claim&) const = default;
};

struct ClaimCorpus {
    std::vector<Claim> claims;
    std::vector<std::string> provenance;

    bool operator==(const ClaimCorpus&) const = default;
};

/// Half-open byte range [start, end) into a rationale's raw text.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const Span&) const = default;
};

struct VerificationStep {
    std::size_t index = 0;
    std::string text;
    Span span;

    bool operator==(const VerificationStep&) const = default;
};

struct RationaleCandidate {
    std::string claim_id;
    std::string generator;
    std::string raw_text;
    std::vector<VerificationStep> steps;
    std::optional<Label> predicted_label;
    std::int64_t token_count = 0;
    bool truncated = false;
    int candidate_index = 1;

    bool operator==(const RationaleCandidate&) const = default;
};

// Error hierarchy. Every failure surfaced by the library derives from Error.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace curator
