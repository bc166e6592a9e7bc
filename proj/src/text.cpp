#include "nlikit/text.hpp"

#include <cctype>

namespace nlikit::text {

bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalnum(u) != 0;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::string strip_terminal_punctuation(std::string_view s) {
    std::size_t end = s.size();
    auto strippable = [](char c) {
        return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':' ||
               std::isspace(static_cast<unsigned char>(c)) != 0;
    };
    while (end > 0 && strippable(s[end - 1])) --end;
    return std::string(s.substr(0, end));
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
    return std::string(s.substr(b, e - b));
}

namespace {

bool equals_ignore_case(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

std::string match_first_letter_case(std::string_view replacement, char original_first) {
    std::string out(replacement);
    if (out.empty()) return out;
    if (std::isupper(static_cast<unsigned char>(original_first)) != 0) {
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    } else {
        out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
    }
    return out;
}

} // namespace

std::string replace_whole_word(std::string_view phrase, std::string_view word,
                               std::string_view replacement,
                               const std::function<bool(std::size_t)>& decide) {
    std::string out;
    out.reserve(phrase.size());
    std::size_t occurrence = 0;
    std::size_t i = 0;
    while (i < phrase.size()) {
        if (!is_word_char(phrase[i])) {
            out.push_back(phrase[i]);
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < phrase.size() && is_word_char(phrase[j])) ++j;
        std::string_view token = phrase.substr(i, j - i);
        if (equals_ignore_case(token, word) && decide(occurrence++)) {
            out += match_first_letter_case(replacement, token.front());
        } else {
            out += token;
        }
        i = j;
    }
    return out;
}

} // namespace nlikit::text
