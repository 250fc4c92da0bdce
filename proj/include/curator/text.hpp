#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace curator {

std::string_view trim(std::string_view text);

std::string to_lower_ascii(std::string_view text);

/// Splits on ASCII whitespace. Views point into `text`.
std::vector<std::string_view> whitespace_tokens(std::string_view text);

/// Default token counter used for the length filter and token consumption.
std::size_t count_tokens(std::string_view text);

/// 64-bit FNV-1a. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Decodes UTF-8 into code points; each malformed byte becomes U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view text);

}  // namespace curator
