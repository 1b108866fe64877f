#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace gap {

// Reserved control tokens. The tokenizer passes them through unsplit and
// the encoder-input builder inserts them verbatim.
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kColToken = "<col>";
inline constexpr std::string_view kSepToken = "<sep>";
inline constexpr std::string_view kMaskToken = "<mask>";

inline bool is_special_token(std::string_view t) {
    return t == kBosToken || t == kEosToken || t == kColToken ||
           t == kSepToken || t == kMaskToken;
}

// Reference sub-token tokenizer: lowercases, splits on whitespace and
// punctuation, and splits identifiers on underscores and case boundaries.
// Deterministic and model-free; downstream trainers may re-tokenize.
class Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const {
        std::vector<std::string> out;
        std::size_t i = 0;
        while (i < text.size()) {
            if (std::isspace(static_cast<unsigned char>(text[i]))) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < text.size() &&
                   !std::isspace(static_cast<unsigned char>(text[j])))
                ++j;
            split_word(text.substr(i, j - i), out);
            i = j;
        }
        return out;
    }

    static std::string detokenize(const std::vector<std::string>& tokens) {
        std::string out;
        for (const auto& t : tokens) {
            if (!out.empty()) out += ' ';
            out += t;
        }
        return out;
    }

private:
    static void split_word(std::string_view word,
                           std::vector<std::string>& out) {
        if (is_special_token(word)) {
            out.emplace_back(word);
            return;
        }
        std::string cur;
        auto flush = [&] {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        };
        char prev = '\0';
        for (std::size_t i = 0; i < word.size(); ++i) {
            unsigned char c = static_cast<unsigned char>(word[i]);
            if (!std::isalnum(c)) {  // punctuation and '_' are separators
                flush();
                prev = '\0';
                continue;
            }
            // lower/digit -> upper starts a new sub-token: "GovernmentForm"
            if (std::isupper(c) && prev != '\0' &&
                (std::islower(static_cast<unsigned char>(prev)) ||
                 std::isdigit(static_cast<unsigned char>(prev)))) {
                flush();
            }
            // "HTTPServer": break between the last upper and the following lower
            if (std::isupper(c) && i + 1 < word.size() &&
                std::islower(static_cast<unsigned char>(word[i + 1])) &&
                prev != '\0' && std::isupper(static_cast<unsigned char>(prev))) {
                flush();
            }
            cur += static_cast<char>(std::tolower(c));
            prev = static_cast<char>(c);
        }
        flush();
    }
};

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Whitespace-separated units after trimming; the length unit for all
// corpus-filter rules.
inline std::size_t token_count(std::string_view s) {
    std::size_t n = 0;
    bool in_tok = false;
    for (char ch : s) {
        bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
        if (!space && !in_tok) ++n;
        in_tok = !space;
    }
    return n;
}

}  // namespace gap
