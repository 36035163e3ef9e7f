#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ledgerlens {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool is_word_char(char c) noexcept;

// Splits on '.', '!' or '?' followed by whitespace (or end of text) and on
// newlines. A '.' between two digits never ends a sentence.
std::vector<std::string> split_sentences(std::string_view text);

std::vector<std::string_view> whitespace_tokens(std::string_view text);

// Lowercased whitespace tokens with every non-alphanumeric character
// removed; tokens that become empty are dropped.
std::vector<std::string> normalized_words(std::string_view text);

// Fixed two-decimal rendering with half-up (away from zero) rounding applied
// to the shortest decimal form of the value, so 2.675 renders as "2.68".
std::string format_fixed2(double value);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// "A", "A and B", "A, B and C".
std::string join_natural(const std::vector<std::string>& parts);

}  // namespace ledgerlens
