#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gap/tokenize.hpp"

namespace gap {

enum class ColumnType { number, time, boolean, text };

inline std::string_view to_string(ColumnType t) {
    switch (t) {
        case ColumnType::number: return "number";
        case ColumnType::time: return "time";
        case ColumnType::boolean: return "boolean";
        case ColumnType::text: return "text";
    }
    return "text";
}

inline std::optional<ColumnType> column_type_from_string(std::string_view s) {
    if (s == "number") return ColumnType::number;
    if (s == "time") return ColumnType::time;
    if (s == "boolean") return ColumnType::boolean;
    if (s == "text") return ColumnType::text;
    return std::nullopt;
}

// A raw rectangular table straight from ingestion; no cleaning applied yet.
struct RawTable {
    std::string name;
    std::vector<std::string> column_names;
    std::vector<std::vector<std::string>> rows;
};

struct Column {
    std::string name;
    ColumnType ctype = ColumnType::text;
    std::vector<std::string> cells;  // cleaned, one per row
};

struct Table {
    std::string name;
    std::vector<Column> columns;
    std::size_t row_count = 0;
};

struct FilterConfig {
    std::size_t max_cell_tokens = 5;
    std::size_t max_name_tokens = 10;
    double max_empty_fraction = 0.5;  // strictly-greater drops the column
    std::size_t min_rows = 3;
    std::size_t min_columns = 4;
    // Cells containing a code point above 127 are emptied unless the byte is
    // listed here.
    std::string non_ascii_allowlist;
    int number_threshold_pct = 80;
    int time_threshold_pct = 80;
};

struct FilterStats {
    std::size_t cells_emptied = 0;     // rule 1
    std::size_t columns_long_name = 0; // rule 2
    std::size_t columns_too_empty = 0; // rule 3
    std::size_t tables_few_rows = 0;   // rule 4
    std::size_t tables_few_columns = 0;// rule 5
};

namespace detail {

inline bool cell_charset_ok(std::string_view cell, const FilterConfig& cfg) {
    for (unsigned char c : cell) {
        if (c > 127 &&
            cfg.non_ascii_allowlist.find(static_cast<char>(c)) ==
                std::string::npos)
            return false;
    }
    return true;
}

inline bool parse_as_number(std::string_view s) {
    std::string t;
    t.reserve(s.size());
    std::size_t start = 0;
    if (!s.empty() && s[0] == '$') start = 1;  // one leading currency symbol
    for (std::size_t i = start; i < s.size(); ++i) {
        if (s[i] == ',') continue;  // thousands separators
        t += s[i];
    }
    if (t.empty()) return false;
    std::size_t i = 0;
    if (t[0] == '+' || t[0] == '-') i = 1;
    std::size_t digits = 0, dots = 0;
    for (; i < t.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(t[i]))) {
            ++digits;
        } else if (t[i] == '.') {
            if (++dots > 1) return false;
        } else {
            return false;
        }
    }
    return digits > 0;
}

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (unsigned char c : s)
        if (!std::isdigit(c)) return false;
    return true;
}

inline bool is_month_name(std::string_view w) {
    static const char* months[] = {
        "january", "february", "march",     "april",   "may",      "june",
        "july",    "august",   "september", "october", "november", "december",
        "jan",     "feb",      "mar",       "apr",     "jun",      "jul",
        "aug",     "sep",      "sept",      "oct",     "nov",      "dec"};
    for (const char* m : months)
        if (w == m) return true;
    return false;
}

inline bool is_year(std::string_view s) {
    return s.size() == 4 && all_digits(s) && (s[0] == '1' || s[0] == '2');
}

// Documented date patterns: 4-digit year, Y-M-D, D/M/Y (or Y/M/D), and a
// month name appearing together with a 4-digit year.
inline bool parse_as_time(std::string_view s) {
    if (is_year(s)) return true;
    auto split_on = [](std::string_view v, char sep) {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= v.size(); ++i) {
            if (i == v.size() || v[i] == sep) {
                parts.push_back(v.substr(start, i - start));
                start = i + 1;
            }
        }
        return parts;
    };
    for (char sep : {'-', '/'}) {
        if (s.find(sep) == std::string_view::npos) continue;
        auto parts = split_on(s, sep);
        if (parts.size() == 3 && all_digits(parts[0]) && all_digits(parts[1]) &&
            all_digits(parts[2]) && parts[0].size() <= 4 &&
            parts[1].size() <= 2 && (parts[2].size() <= 4) &&
            (is_year(parts[0]) || is_year(parts[2]) || parts[2].size() == 2))
            return true;
    }
    bool saw_month = false, saw_year = false;
    std::string lowered = ascii_lower(s);
    std::size_t i = 0;
    while (i < lowered.size()) {
        while (i < lowered.size() &&
               !std::isalnum(static_cast<unsigned char>(lowered[i])))
            ++i;
        std::size_t j = i;
        while (j < lowered.size() &&
               std::isalnum(static_cast<unsigned char>(lowered[j])))
            ++j;
        if (j > i) {
            std::string_view w(lowered.data() + i, j - i);
            if (is_month_name(w)) saw_month = true;
            if (is_year(w)) saw_year = true;
        }
        i = j;
    }
    return saw_month && saw_year;
}

inline bool is_boolean_word(std::string_view s) {
    std::string w = ascii_lower(s);
    return w == "yes" || w == "no" || w == "true" || w == "false" ||
           w == "0" || w == "1";
}

}  // namespace detail

// Rule order: time, number, boolean, text. Time wins over number so that
// year columns land on the type MIN/MAX expects rather than on SUM/AVG
// material. An empty column is text.
inline ColumnType infer_column_type(const std::vector<std::string>& cells,
                                    const FilterConfig& cfg = {}) {
    std::size_t non_empty = 0, numbers = 0, times = 0;
    bool all_boolean = true;
    for (const auto& c : cells) {
        if (c.empty()) continue;
        ++non_empty;
        if (detail::parse_as_number(c)) ++numbers;
        if (detail::parse_as_time(c)) ++times;
        if (!detail::is_boolean_word(c)) all_boolean = false;
    }
    if (non_empty == 0) return ColumnType::text;
    if (times * 100 >= non_empty * static_cast<std::size_t>(cfg.time_threshold_pct))
        return ColumnType::time;
    if (numbers * 100 >= non_empty * static_cast<std::size_t>(cfg.number_threshold_pct))
        return ColumnType::number;
    if (all_boolean) return ColumnType::boolean;
    return ColumnType::text;
}

// Rule 1 applied to one cell: trim, then empty it when it is too long or
// contains a disallowed character.
inline std::string clean_cell(std::string_view raw, const FilterConfig& cfg,
                              bool* emptied = nullptr) {
    std::string cell = trim(raw);
    if (cell.empty()) return cell;
    if (token_count(cell) > cfg.max_cell_tokens ||
        !detail::cell_charset_ok(cell, cfg)) {
        if (emptied) *emptied = true;
        return std::string{};
    }
    return cell;
}

// Applies the filter rules in order:
//   (1) over-long / non-ASCII cells emptied
//   (2) columns with names longer than max_name_tokens dropped
//   (3) columns with more than max_empty_fraction empty cells dropped
//   (4) tables with fewer than min_rows rows dropped
//   (5) tables with fewer than min_columns surviving columns dropped
// Filtering is total; per-rule drop counts land in `stats`.
inline std::vector<Table> filter_corpus(const std::vector<RawTable>& tables,
                                        const FilterConfig& cfg = {},
                                        FilterStats* stats = nullptr) {
    FilterStats local;
    FilterStats& st = stats ? *stats : local;
    std::vector<Table> out;
    for (const RawTable& raw : tables) {
        const std::size_t width = raw.column_names.size();
        const std::size_t rows = raw.rows.size();

        std::vector<Column> cols(width);
        for (std::size_t c = 0; c < width; ++c) {
            cols[c].name = raw.column_names[c];
            cols[c].cells.resize(rows);
        }
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                bool emptied = false;
                cols[c].cells[r] = clean_cell(raw.rows[r][c], cfg, &emptied);
                if (emptied) ++st.cells_emptied;
            }
        }

        std::vector<Column> kept;
        kept.reserve(width);
        for (auto& col : cols) {
            if (token_count(col.name) > cfg.max_name_tokens) {
                ++st.columns_long_name;
                continue;
            }
            std::size_t empty = 0;
            for (const auto& cell : col.cells)
                if (cell.empty()) ++empty;
            if (rows > 0 && static_cast<double>(empty) >
                                cfg.max_empty_fraction *
                                    static_cast<double>(rows)) {
                ++st.columns_too_empty;
                continue;
            }
            kept.push_back(std::move(col));
        }

        if (rows < cfg.min_rows) {
            ++st.tables_few_rows;
            continue;
        }
        if (kept.size() < cfg.min_columns) {
            ++st.tables_few_columns;
            continue;
        }

        Table t;
        t.name = raw.name;
        t.row_count = rows;
        for (auto& col : kept) col.ctype = infer_column_type(col.cells, cfg);
        t.columns = std::move(kept);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace gap
