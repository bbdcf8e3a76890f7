// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 faitheval contributors

#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace faitheval::detail {

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline bool is_alpha(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

inline char to_lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), to_lower);
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

// Whitespace-delimited word count; the unit of the token-budget estimate.
inline std::size_t word_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

// First n whitespace-delimited words, re-joined with single spaces.
inline std::string head_words(std::string_view s, std::size_t n) {
    std::string out;
    std::size_t taken = 0;
    std::size_t i = 0;
    while (i < s.size() && taken < n) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t b = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > b) {
            if (taken > 0) out += ' ';
            out.append(s.substr(b, i - b));
            ++taken;
        }
    }
    return out;
}

inline std::string normalize_whitespace(std::string_view s) {
    return head_words(s, s.size() + 1);
}

// Maximal runs of alphabetic characters, lowercased. Punctuation and
// digits act as separators, so "u.s.-based" yields {"u","s","based"}.
inline std::vector<std::string> alpha_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_alpha(c)) {
            cur += to_lower(c);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline std::unordered_set<std::string> alpha_token_set(std::string_view s) {
    auto toks = alpha_tokens(s);
    return std::unordered_set<std::string>(toks.begin(), toks.end());
}

}  // namespace faitheval::detail
