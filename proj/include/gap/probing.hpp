#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gap/sql/extract.hpp"
#include "gap/tokenize.hpp"

namespace gap {

struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimum edit count with unit-cost insert/delete/substitute.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() > b.size()) std::swap(a, b);
    std::vector<std::size_t> row(a.size() + 1);
    for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
        std::size_t diag = row[0];
        row[0] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            std::size_t next = std::min(
                {row[i] + 1, row[i - 1] + 1,
                 diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = row[i];
            row[i] = next;
        }
    }
    return row[a.size()];
}

// round(100 * (1 - lev(lower(a), lower(b)) / max(|a|, |b|, 1))).
inline int fuzzy_score(std::string_view a, std::string_view b) {
    std::size_t denom = std::max({a.size(), b.size(), std::size_t{1}});
    std::size_t dist = levenshtein(ascii_lower(a), ascii_lower(b));
    // round half up, exact in integers: round(100 * (denom-dist) / denom)
    std::size_t kept = denom > dist ? denom - dist : 0;
    return static_cast<int>((200 * kept + denom) / (2 * denom));
}

// English forms tried for integer literals when searching the utterance.
// The full 0..100 table is documented in docs/number_words.md.
inline std::vector<std::string> number_words(long long n) {
    if (n < 0 || n > 100) return {};
    static const char* units[] = {"zero", "one", "two",   "three", "four",
                                  "five", "six", "seven", "eight", "nine"};
    static const char* unit_ords[] = {"zeroth", "first",   "second", "third",
                                      "fourth", "fifth",   "sixth",  "seventh",
                                      "eighth", "ninth"};
    static const char* teens[] = {"ten",      "eleven",  "twelve",
                                  "thirteen", "fourteen", "fifteen",
                                  "sixteen",  "seventeen", "eighteen",
                                  "nineteen"};
    static const char* teen_ords[] = {"tenth",       "eleventh",  "twelfth",
                                      "thirteenth",  "fourteenth", "fifteenth",
                                      "sixteenth",   "seventeenth",
                                      "eighteenth",  "nineteenth"};
    static const char* tens[] = {"",      "",      "twenty", "thirty",
                                 "forty", "fifty", "sixty",  "seventy",
                                 "eighty", "ninety"};
    static const char* ten_ords[] = {"",         "",         "twentieth",
                                     "thirtieth", "fortieth", "fiftieth",
                                     "sixtieth",  "seventieth", "eightieth",
                                     "ninetieth"};
    if (n == 100) return {"one hundred", "hundred", "one hundredth"};
    if (n < 10) return {units[n], unit_ords[n]};
    if (n < 20) return {teens[n - 10], teen_ords[n - 10]};
    long long t = n / 10, u = n % 10;
    if (u == 0) return {tens[t], ten_ords[t]};
    return {std::string(tens[t]) + " " + units[u],
            std::string(tens[t]) + " " + unit_ords[u]};
}

struct ValueSpan {
    std::size_t begin = 0;  // token range [begin, end) in the utterance
    std::size_t end = 0;
    std::string column;  // gold column identity
    bool operator==(const ValueSpan&) const = default;
};

struct CvmExample {
    std::vector<std::string> utterance_tokens;
    std::vector<ValueSpan> value_spans;
    bool operator==(const CvmExample&) const = default;
};

namespace probing_detail {

inline bool parse_integer(std::string_view s, long long& out) {
    if (s.empty()) return false;
    std::size_t i = 0;
    if (s[0] == '-') i = 1;
    if (i == s.size()) return false;
    long long v = 0;
    for (; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        v = v * 10 + (s[i] - '0');
        if (v > 1000000) return false;
    }
    out = s[0] == '-' ? -v : v;
    return true;
}

struct WindowPick {
    int score = -1;
    std::size_t begin = 0, end = 0;
};

// Total ordering (score desc, begin asc, end asc) so the result does not
// depend on candidate enumeration order.
inline void consider(WindowPick& best, int score, std::size_t b,
                     std::size_t e) {
    if (score > best.score ||
        (score == best.score &&
         (b < best.begin || (b == best.begin && e < best.end)))) {
        best = {score, b, e};
    }
}

}  // namespace probing_detail

// Aligns each SQL literal to the best same-length token window of the
// utterance by fuzzy score; integers are additionally tried as English
// words. A literal with no window at or above the threshold drops the whole
// example (returns nullopt). Spans never overlap: later literals skip
// windows claimed by earlier ones.
inline std::optional<CvmExample> align_values(
    const std::vector<std::string>& utterance_tokens, const sql::Query& ast,
    const std::vector<std::string>& schema_columns, int threshold = 60,
    const Tokenizer& tok = {}) {
    sql::ExtractedElements ex = sql::extract_elements(ast);

    CvmExample out;
    out.utterance_tokens = utterance_tokens;

    auto in_schema = [&](const std::string& identity) {
        for (const auto& s : schema_columns)
            if (ascii_lower(s) == identity) return true;
        return false;
    };
    auto overlaps = [&](std::size_t b, std::size_t e) {
        for (const auto& span : out.value_spans)
            if (b < span.end && span.begin < e) return true;
        return false;
    };

    for (const auto& col : ex.columns) {
        std::string identity = sql::column_identity(col.table, col.name);
        for (const auto& value : col.values) {
            if (!in_schema(identity)) return std::nullopt;

            std::vector<std::string> candidates{value};
            long long as_int = 0;
            if (probing_detail::parse_integer(value, as_int))
                for (auto& w : number_words(as_int))
                    candidates.push_back(std::move(w));

            probing_detail::WindowPick best;
            for (const auto& cand : candidates) {
                std::vector<std::string> cand_tokens = tok.tokenize(cand);
                std::size_t n = cand_tokens.size();
                if (n == 0 || n > utterance_tokens.size()) continue;
                std::string cand_text = Tokenizer::detokenize(cand_tokens);
                for (std::size_t i = 0; i + n <= utterance_tokens.size(); ++i) {
                    if (overlaps(i, i + n)) continue;
                    std::string window;
                    for (std::size_t j = i; j < i + n; ++j) {
                        if (!window.empty()) window += ' ';
                        window += utterance_tokens[j];
                    }
                    int score = fuzzy_score(cand_text, window);
                    if (score >= threshold)
                        probing_detail::consider(best, score, i, i + n);
                }
            }
            if (best.score < 0) return std::nullopt;
            out.value_spans.push_back({best.begin, best.end, identity});
        }
    }
    return out;
}

// Instance-level accuracy: an example counts correct only when every span's
// predicted column equals gold. Empty gold is defined as 1.0 and sets the
// warning flag.
inline double cvm_accuracy(
    const std::vector<std::vector<std::string>>& predictions,
    const std::vector<CvmExample>& gold, bool* warned_empty = nullptr) {
    if (predictions.size() != gold.size())
        throw LengthMismatch("prediction count " +
                             std::to_string(predictions.size()) +
                             " != gold count " + std::to_string(gold.size()));
    if (gold.empty()) {
        if (warned_empty) *warned_empty = true;
        return 1.0;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (predictions[i].size() != gold[i].value_spans.size())
            throw LengthMismatch("example " + std::to_string(i) + ": " +
                                 std::to_string(predictions[i].size()) +
                                 " predictions for " +
                                 std::to_string(gold[i].value_spans.size()) +
                                 " spans");
        bool all = true;
        for (std::size_t j = 0; j < predictions[i].size(); ++j)
            all = all && ascii_lower(predictions[i][j]) ==
                             gold[i].value_spans[j].column;
        if (all) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

}  // namespace gap
