#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace nlikit::text {

bool is_word_char(char c);

std::string to_lower_ascii(std::string_view s);

// Lowercased alphanumeric token runs, in order of appearance.
std::vector<std::string> tokenize(std::string_view s);

// Removes trailing whitespace and terminal punctuation (.,!?;:).
std::string strip_terminal_punctuation(std::string_view s);

std::string trim(std::string_view s);

// Replaces whole-word occurrences of `word` (matched case-insensitively)
// with `replacement`, preserving the case of the first letter. `decide`
// is consulted once per occurrence, in left-to-right order.
std::string replace_whole_word(std::string_view phrase, std::string_view word,
                               std::string_view replacement,
                               const std::function<bool(std::size_t occurrence)>& decide);

} // namespace nlikit::text
